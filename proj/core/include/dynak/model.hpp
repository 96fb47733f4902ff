#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "dynak/dataset.hpp"

namespace dynak {

enum class ModelKind {
  kMF,   ///< inner-product matrix factorization
  kHRM,  ///< hybrid representation of user + previous basket, average pooled
};

std::string_view to_string(ModelKind kind);
/// Accepts "MF" or "HRM" (case-insensitive); throws ConfigError otherwise.
ModelKind parse_model_kind(std::string_view text);

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Model parameters: user factors, item factors, and the personal decision
/// boundaries t_u anchored at a global value.
struct FactorModel {
  ModelKind kind = ModelKind::kMF;
  Matrix user_factors;
  Matrix item_factors;
  std::vector<double> boundaries;
  double anchor = 0.0;

  std::size_t dim() const { return user_factors.cols(); }
  std::size_t num_users() const { return user_factors.rows(); }
  std::size_t num_items() const { return item_factors.rows(); }

  /// Throws DimensionError unless the shapes agree, dim() >= 1 and every
  /// parameter is finite.
  void validate() const;
  bool all_finite() const;

  friend bool operator==(const FactorModel&, const FactorModel&) = default;
};

/// Factors ~ N(0, 0.01^2), every boundary set to `anchor`.
FactorModel init_model(ModelKind kind, std::size_t dim, std::size_t num_users,
                       std::size_t num_items, double anchor, std::uint64_t seed);
FactorModel init_model(ModelKind kind, std::size_t dim, std::size_t num_users,
                       std::size_t num_items, double anchor, std::mt19937_64& rng);

double dot(std::span<const double> a, std::span<const double> b);

/// <p_u, q_i>
double score_mf(const FactorModel& model, UserId user, ItemId item);

/// (p_u + mean_{j in basket} q_j) / 2, written to `out` (size dim()).
void basket_representation(const FactorModel& model, UserId user,
                           std::span<const ItemId> basket, std::span<double> out);
std::vector<double> basket_representation(const FactorModel& model, UserId user,
                                          std::span<const ItemId> basket);

/// q_i . basket_representation(u, prev_basket)
double score_hrm(const FactorModel& model, UserId user, std::span<const ItemId> prev_basket,
                 ItemId item);

/// Precomputes the query vector for one user (p_u for MF, the hybrid vector
/// for HRM) so that scoring a candidate is a single dot product.
class UserScorer {
 public:
  /// `context` is required (non-empty) for HRM and ignored for MF.
  UserScorer(const FactorModel& model, UserId user, std::span<const ItemId> context = {});

  double operator()(ItemId item) const;
  std::span<const double> query() const { return query_; }

 private:
  const FactorModel* model_;
  std::vector<double> query_;
};

}  // namespace dynak
