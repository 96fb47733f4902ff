#include "dynak/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "dynak/errors.hpp"

namespace dynak {

namespace {

constexpr double kInitStddev = 0.01;

void check_user(const FactorModel& model, UserId user) {
  if (user >= model.num_users()) {
    throw LookupError("unknown user index " + std::to_string(user));
  }
}

void check_item(const FactorModel& model, ItemId item) {
  if (item >= model.num_items()) {
    throw LookupError("unknown item index " + std::to_string(item));
  }
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kMF ? "MF" : "HRM";
}

ModelKind parse_model_kind(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "MF") return ModelKind::kMF;
  if (upper == "HRM") return ModelKind::kHRM;
  throw ConfigError("unknown model kind '" + std::string(text) + "' (expected MF or HRM)");
}

bool FactorModel::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(user_factors.values().begin(), user_factors.values().end(), finite) &&
         std::all_of(item_factors.values().begin(), item_factors.values().end(), finite) &&
         std::all_of(boundaries.begin(), boundaries.end(), finite) && std::isfinite(anchor);
}

void FactorModel::validate() const {
  if (dim() == 0) throw DimensionError("latent dimension must be >= 1");
  if (item_factors.cols() != dim()) throw DimensionError("user/item factor widths differ");
  if (boundaries.size() != num_users()) {
    throw DimensionError("boundary vector length " + std::to_string(boundaries.size()) +
                         " != user count " + std::to_string(num_users()));
  }
  if (!all_finite()) throw DimensionError("model has non-finite parameters");
}

FactorModel init_model(ModelKind kind, std::size_t dim, std::size_t num_users,
                       std::size_t num_items, double anchor, std::mt19937_64& rng) {
  if (dim == 0 || num_users == 0 || num_items == 0) {
    throw DimensionError("init_model needs dim, users and items all >= 1 (got f=" +
                         std::to_string(dim) + " users=" + std::to_string(num_users) +
                         " items=" + std::to_string(num_items) + ")");
  }
  FactorModel model;
  model.kind = kind;
  model.user_factors = Matrix(num_users, dim);
  model.item_factors = Matrix(num_items, dim);
  std::normal_distribution<double> gauss(0.0, kInitStddev);
  for (auto& v : model.user_factors.values()) v = gauss(rng);
  for (auto& v : model.item_factors.values()) v = gauss(rng);
  model.boundaries.assign(num_users, anchor);
  model.anchor = anchor;
  return model;
}

FactorModel init_model(ModelKind kind, std::size_t dim, std::size_t num_users,
                       std::size_t num_items, double anchor, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return init_model(kind, dim, num_users, num_items, anchor, rng);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

double score_mf(const FactorModel& model, UserId user, ItemId item) {
  check_user(model, user);
  check_item(model, item);
  return dot(model.user_factors.row(user), model.item_factors.row(item));
}

void basket_representation(const FactorModel& model, UserId user,
                           std::span<const ItemId> basket, std::span<double> out) {
  if (basket.empty()) throw ContractError("basket representation needs a non-empty basket");
  check_user(model, user);
  std::fill(out.begin(), out.end(), 0.0);
  for (const ItemId j : basket) {
    check_item(model, j);
    const auto q = model.item_factors.row(j);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += q[k];
  }
  const double inv = 1.0 / static_cast<double>(basket.size());
  const auto p = model.user_factors.row(user);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = 0.5 * (p[k] + out[k] * inv);
}

std::vector<double> basket_representation(const FactorModel& model, UserId user,
                                          std::span<const ItemId> basket) {
  std::vector<double> out(model.dim());
  basket_representation(model, user, basket, out);
  return out;
}

double score_hrm(const FactorModel& model, UserId user, std::span<const ItemId> prev_basket,
                 ItemId item) {
  check_item(model, item);
  const auto hybrid = basket_representation(model, user, prev_basket);
  return dot(model.item_factors.row(item), hybrid);
}

UserScorer::UserScorer(const FactorModel& model, UserId user, std::span<const ItemId> context)
    : model_(&model) {
  check_user(model, user);
  if (model.kind == ModelKind::kMF) {
    const auto p = model.user_factors.row(user);
    query_.assign(p.begin(), p.end());
  } else {
    if (context.empty()) throw ContractError("HRM scoring requires a context basket");
    query_ = basket_representation(model, user, context);
  }
}

double UserScorer::operator()(ItemId item) const {
  check_item(*model_, item);
  return dot(model_->item_factors.row(item), query_);
}

}  // namespace dynak
