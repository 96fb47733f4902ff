#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "dynak/dataset.hpp"
#include "dynak/model.hpp"
#include "dynak/objectives.hpp"

namespace dynak {

struct TrainConfig {
  ModelKind kind = ModelKind::kMF;
  std::size_t dim = 50;
  double alpha = 0.5;         ///< probability of a classification step
  double lambda_t = 1.0;      ///< boundary regularization strength
  double anchor = 1.0;        ///< global boundary t
  double eta = 0.05;          ///< learning rate
  double lambda_theta = 0.01; ///< factor regularization on touched rows
  std::size_t epochs = 30;
  /// Explicit iteration count; 0 means epochs x |train interactions|.
  std::size_t iterations = 0;
  double negative_ratio = 1.0;  ///< negatives drawn per positive for D
  std::uint64_t seed = 42;
  ClassificationLoss loss = ClassificationLoss::kLogistic;
  /// Iterations between loss checkpoints; 0 means once per epoch.
  std::size_t checkpoint_every = 0;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// N = epochs x |train interactions| (or `iterations` when set).
std::size_t train_epoch_schedule(const TrainConfig& config, std::size_t train_interactions);

/// Read-only view of a train log shaped for sampling: positive sets per user
/// and, for HRM, chronological sessions whose predecessor gives the context.
class TrainingIndex {
 public:
  struct Event {
    UserId user;
    ItemId item;
    std::uint32_t session;  ///< target session (HRM only; >= 1)
  };

  TrainingIndex(const InteractionLog& train, ModelKind kind);

  ModelKind kind() const { return kind_; }
  std::size_t num_users() const { return num_users_; }
  std::size_t num_items() const { return num_items_; }

  /// MF: every train interaction. HRM: every (user, session >= 1, item).
  std::span<const Event> events() const { return events_; }

  /// Sorted B+_u.
  std::span<const ItemId> positives(UserId user) const { return positives_[user]; }
  /// Sorted items of one session.
  std::span<const ItemId> session(UserId user, std::uint32_t index) const {
    return sessions_[user][index];
  }
  std::size_t session_count(UserId user) const { return sessions_[user].size(); }

  /// Items a negative for `event` must avoid: B+_u (MF) or T_t^u (HRM).
  std::span<const ItemId> exclusions(const Event& event) const;
  /// Previous session for HRM events; empty for MF.
  std::span<const ItemId> context(const Event& event) const;

 private:
  ModelKind kind_;
  std::size_t num_users_;
  std::size_t num_items_;
  std::vector<Event> events_;
  std::vector<std::vector<ItemId>> positives_;
  UserSessions sessions_;
};

struct RankingTriple {
  UserId user = 0;
  ItemId positive = 0;
  ItemId negative = 0;
  std::span<const ItemId> context;  ///< previous basket (HRM)
};

struct LabeledExample {
  UserId user = 0;
  ItemId item = 0;
  int label = 1;
  std::span<const ItemId> context;
};

/// Draws the sampled sets of the joint objective without materializing them.
/// Negatives are found by rejection: up to kRejectionCap uniform draws, after
/// which the positive is skipped and a fresh one drawn.
class ExampleSampler {
 public:
  static constexpr int kRejectionCap = 100;
  static constexpr int kMaxConsecutiveSkips = 1000;

  explicit ExampleSampler(const TrainingIndex& index);

  RankingTriple sample_ranking_triple(std::mt19937_64& rng);
  LabeledExample sample_classification_example(std::mt19937_64& rng, double negative_ratio);

  std::size_t skipped() const { return skipped_; }

 private:
  const TrainingIndex::Event& draw_event(std::mt19937_64& rng);
  bool draw_negative(const TrainingIndex::Event& event, std::mt19937_64& rng, ItemId& out);

  const TrainingIndex* index_;
  std::size_t skipped_ = 0;
};

/// Gradient of one per-example objective, restricted to the rows it touches.
struct SparseGradient {
  UserId user = 0;
  std::vector<double> user_grad;
  std::vector<ItemId> items;
  std::vector<double> item_grads;  ///< items.size() x dim, row-major
  bool has_boundary = false;  ///< true for classification examples
  double boundary_grad = 0.0;
  double loss = 0.0;  ///< objective value at the point of evaluation

  void reset(UserId u, std::size_t dim);
  /// Accumulator row for `item`, added on first use.
  std::span<double> item_row(ItemId item);
  std::span<const double> item_row_at(std::size_t k) const;
};

struct Regularization {
  double lambda_theta = 0.0;
  double lambda_t = 0.0;
  ClassificationLoss loss = ClassificationLoss::kLogistic;
};

/// l(y (s - t_u)) + lambda_t (t_u - t)^2 + lambda_theta * (squared norms of
/// the touched user and item rows).
double classification_objective(const FactorModel& model, const LabeledExample& example,
                                const Regularization& reg);
void classification_gradient(const FactorModel& model, const LabeledExample& example,
                             const Regularization& reg, SparseGradient& out);

/// -ln sigmoid(s_ui - s_uj) + lambda_theta * (squared norms of touched rows).
double ranking_objective(const FactorModel& model, const RankingTriple& triple,
                         double lambda_theta);
void ranking_gradient(const FactorModel& model, const RankingTriple& triple,
                      double lambda_theta, SparseGradient& out);

/// theta <- theta - eta * grad on the touched rows, and t_u when
/// `has_boundary` is set.
void apply_gradient(FactorModel& model, const SparseGradient& grad, double eta);

struct Checkpoint {
  std::size_t iteration = 0;
  double cf_loss = 0.0;  ///< mean over the window; NaN when no cf step ran
  double rk_loss = 0.0;
  std::size_t cf_steps = 0;
  std::size_t rk_steps = 0;
};

struct TrainReport {
  std::vector<Checkpoint> checkpoints;
  std::size_t iterations = 0;
  std::size_t classification_steps = 0;
  std::size_t ranking_steps = 0;
  std::size_t skipped_samples = 0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  FactorModel model;
  TrainReport report;
};

enum class StepKind { kClassification, kRanking };

/// Sampled SGD on alpha * L_cf + (1 - alpha) * L_rk. Each iteration draws
/// z ~ U[0, 1) and takes a classification step (theta and t_u) when
/// z < alpha, a ranking step (theta only) otherwise. Single writer; the
/// result is a pure function of (config, train log).
class JointTrainer {
 public:
  JointTrainer(const TrainConfig& config, const InteractionLog& train);
  JointTrainer(const JointTrainer&) = delete;
  JointTrainer& operator=(const JointTrainer&) = delete;

  StepKind step();
  /// Runs the remaining iterations of the schedule.
  void run();

  const FactorModel& model() const { return model_; }
  const TrainReport& report() const { return report_; }
  std::size_t scheduled_iterations() const { return total_; }
  const TrainingIndex& index() const { return index_; }

  TrainResult finish() &&;

 private:
  void checkpoint();

  TrainConfig config_;
  TrainingIndex index_;
  std::mt19937_64 rng_;
  FactorModel model_;
  ExampleSampler sampler_;
  SparseGradient grad_;
  std::size_t total_;
  std::size_t checkpoint_every_;
  TrainReport report_;
  double cf_sum_ = 0.0;
  double rk_sum_ = 0.0;
  std::size_t cf_window_ = 0;
  std::size_t rk_window_ = 0;
};

TrainResult joint_train(const TrainConfig& config, const InteractionLog& train);

}  // namespace dynak
