#include "dynak/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "dynak/errors.hpp"

namespace dynak {

namespace {

bool contains(std::span<const ItemId> sorted, ItemId item) {
  return std::binary_search(sorted.begin(), sorted.end(), item);
}

double squared_norm(std::span<const double> v) { return dot(v, v); }

// Adds the lambda_theta * ||row||^2 terms for every touched row and returns
// their sum.
double add_row_regularization(const FactorModel& model, double lambda_theta,
                              SparseGradient& out) {
  if (lambda_theta == 0.0) return 0.0;
  const auto p = model.user_factors.row(out.user);
  double penalty = squared_norm(p);
  for (std::size_t k = 0; k < p.size(); ++k) out.user_grad[k] += 2.0 * lambda_theta * p[k];
  for (std::size_t r = 0; r < out.items.size(); ++r) {
    const auto q = model.item_factors.row(out.items[r]);
    penalty += squared_norm(q);
    auto g = std::span<double>(out.item_grads).subspan(r * q.size(), q.size());
    for (std::size_t k = 0; k < q.size(); ++k) g[k] += 2.0 * lambda_theta * q[k];
  }
  return lambda_theta * penalty;
}

// Routes d(score)/d(hybrid) = `dh` back through the two-level mean:
// 1/2 to the user row and 1/(2|C|) to every context item row.
void backprop_hybrid(std::span<const double> dh, std::span<const ItemId> context,
                     SparseGradient& out) {
  for (std::size_t k = 0; k < dh.size(); ++k) out.user_grad[k] += 0.5 * dh[k];
  const double share = 0.5 / static_cast<double>(context.size());
  for (const ItemId c : context) {
    auto row = out.item_row(c);
    for (std::size_t k = 0; k < dh.size(); ++k) row[k] += share * dh[k];
  }
}

void require_context(const FactorModel& model, std::span<const ItemId> context) {
  if (model.kind == ModelKind::kHRM && context.empty()) {
    throw ContractError("HRM examples need a non-empty context basket");
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("train.alpha must lie in [0, 1]");
  if (!(eta > 0.0)) throw ConfigError("train.eta must be > 0");
  if (!(lambda_t >= 0.0)) throw ConfigError("train.lambda_t must be >= 0");
  if (!(lambda_theta >= 0.0)) throw ConfigError("train.lambda_theta must be >= 0");
  if (!(negative_ratio >= 0.0)) throw ConfigError("train.negative_ratio must be >= 0");
  if (!std::isfinite(anchor)) throw ConfigError("train.t must be finite");
  if (dim == 0) throw ConfigError("model.f must be >= 1");
  if (epochs == 0 && iterations == 0) throw ConfigError("train.epochs must be >= 1");
}

std::size_t train_epoch_schedule(const TrainConfig& config, std::size_t train_interactions) {
  if (config.iterations > 0) return config.iterations;
  if (config.epochs == 0) throw ConfigError("train.epochs must be >= 1");
  return config.epochs * train_interactions;
}

// --- TrainingIndex ---------------------------------------------------------

TrainingIndex::TrainingIndex(const InteractionLog& train, ModelKind kind)
    : kind_(kind),
      num_users_(train.num_users()),
      num_items_(train.num_items()),
      positives_(user_item_sets(train)) {
  if (kind == ModelKind::kMF) {
    events_.reserve(train.interactions.size());
    for (const auto& x : train.interactions) events_.push_back({x.user, x.item, 0});
    return;
  }
  sessions_ = group_sessions(train);
  for (UserId u = 0; u < sessions_.size(); ++u) {
    for (std::uint32_t s = 1; s < sessions_[u].size(); ++s) {
      for (const ItemId i : sessions_[u][s]) events_.push_back({u, i, s});
    }
  }
}

std::span<const ItemId> TrainingIndex::exclusions(const Event& event) const {
  if (kind_ == ModelKind::kMF) return positives_[event.user];
  return sessions_[event.user][event.session];
}

std::span<const ItemId> TrainingIndex::context(const Event& event) const {
  if (kind_ == ModelKind::kMF) return {};
  return sessions_[event.user][event.session - 1];
}

// --- ExampleSampler --------------------------------------------------------

ExampleSampler::ExampleSampler(const TrainingIndex& index) : index_(&index) {}

const TrainingIndex::Event& ExampleSampler::draw_event(std::mt19937_64& rng) {
  const auto events = index_->events();
  if (events.empty()) throw SamplingError("training index has no positive events");
  std::uniform_int_distribution<std::size_t> pick(0, events.size() - 1);
  return events[pick(rng)];
}

bool ExampleSampler::draw_negative(const TrainingIndex::Event& event, std::mt19937_64& rng,
                                   ItemId& out) {
  const auto excluded = index_->exclusions(event);
  std::uniform_int_distribution<ItemId> pick(0, static_cast<ItemId>(index_->num_items() - 1));
  for (int attempt = 0; attempt < kRejectionCap; ++attempt) {
    const ItemId j = pick(rng);
    if (!contains(excluded, j)) {
      out = j;
      return true;
    }
  }
  return false;
}

RankingTriple ExampleSampler::sample_ranking_triple(std::mt19937_64& rng) {
  for (int skips = 0; skips < kMaxConsecutiveSkips; ++skips) {
    const auto& event = draw_event(rng);
    ItemId negative = 0;
    if (draw_negative(event, rng, negative)) {
      return {event.user, event.item, negative, index_->context(event)};
    }
    ++skipped_;
  }
  throw SamplingError("no negative item found after " + std::to_string(kMaxConsecutiveSkips) +
                      " resamples; positives cover the item vocabulary");
}

LabeledExample ExampleSampler::sample_classification_example(std::mt19937_64& rng,
                                                             double negative_ratio) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const bool positive = coin(rng) < 1.0 / (1.0 + negative_ratio);
  if (positive) {
    const auto& event = draw_event(rng);
    return {event.user, event.item, 1, index_->context(event)};
  }
  for (int skips = 0; skips < kMaxConsecutiveSkips; ++skips) {
    const auto& event = draw_event(rng);
    ItemId negative = 0;
    if (draw_negative(event, rng, negative)) {
      return {event.user, negative, -1, index_->context(event)};
    }
    ++skipped_;
  }
  throw SamplingError("no negative item found after " + std::to_string(kMaxConsecutiveSkips) +
                      " resamples; positives cover the item vocabulary");
}

// --- gradients -------------------------------------------------------------

void SparseGradient::reset(UserId u, std::size_t dim) {
  user = u;
  user_grad.assign(dim, 0.0);
  items.clear();
  item_grads.clear();
  has_boundary = false;
  boundary_grad = 0.0;
  loss = 0.0;
}

std::span<double> SparseGradient::item_row(ItemId item) {
  const std::size_t dim = user_grad.size();
  const auto it = std::find(items.begin(), items.end(), item);
  std::size_t r = static_cast<std::size_t>(it - items.begin());
  if (it == items.end()) {
    items.push_back(item);
    item_grads.resize(item_grads.size() + dim, 0.0);
  }
  return std::span<double>(item_grads).subspan(r * dim, dim);
}

std::span<const double> SparseGradient::item_row_at(std::size_t k) const {
  const std::size_t dim = user_grad.size();
  return std::span<const double>(item_grads).subspan(k * dim, dim);
}

double classification_objective(const FactorModel& model, const LabeledExample& example,
                                const Regularization& reg) {
  SparseGradient scratch;
  classification_gradient(model, example, reg, scratch);
  return scratch.loss;
}

void classification_gradient(const FactorModel& model, const LabeledExample& example,
                             const Regularization& reg, SparseGradient& out) {
  require_context(model, example.context);
  const std::size_t dim = model.dim();
  out.reset(example.user, dim);
  const auto p = model.user_factors.row(example.user);
  const auto q = model.item_factors.row(example.item);
  const double boundary = model.boundaries[example.user];

  std::vector<double> hybrid;
  std::span<const double> query = p;
  if (model.kind == ModelKind::kHRM) {
    hybrid = basket_representation(model, example.user, example.context);
    query = hybrid;
  }
  const double score = dot(query, q);
  const double m = margin(example.label, score, boundary);
  // d loss / d score
  const double g = example.label * classification_loss_grad(reg.loss, m);

  auto target = out.item_row(example.item);
  for (std::size_t k = 0; k < dim; ++k) target[k] += g * query[k];
  if (model.kind == ModelKind::kMF) {
    for (std::size_t k = 0; k < dim; ++k) out.user_grad[k] += g * q[k];
  } else {
    std::vector<double> dh(q.begin(), q.end());
    for (auto& v : dh) v *= g;
    backprop_hybrid(dh, example.context, out);
  }
  out.has_boundary = true;
  out.boundary_grad = -g + boundary_penalty_grad(boundary, model.anchor, reg.lambda_t);
  out.loss = classification_loss(reg.loss, m) +
             boundary_penalty(boundary, model.anchor, reg.lambda_t) +
             add_row_regularization(model, reg.lambda_theta, out);
}

double ranking_objective(const FactorModel& model, const RankingTriple& triple,
                         double lambda_theta) {
  SparseGradient scratch;
  ranking_gradient(model, triple, lambda_theta, scratch);
  return scratch.loss;
}

void ranking_gradient(const FactorModel& model, const RankingTriple& triple,
                      double lambda_theta, SparseGradient& out) {
  require_context(model, triple.context);
  const std::size_t dim = model.dim();
  out.reset(triple.user, dim);
  const auto p = model.user_factors.row(triple.user);
  const auto qi = model.item_factors.row(triple.positive);
  const auto qj = model.item_factors.row(triple.negative);

  std::vector<double> hybrid;
  std::span<const double> query = p;
  if (model.kind == ModelKind::kHRM) {
    hybrid = basket_representation(model, triple.user, triple.context);
    query = hybrid;
  }
  const double s_pos = dot(query, qi);
  const double s_neg = dot(query, qj);
  // d loss / d (s_pos - s_neg)
  const double g = bpr_pair_loss_grad(s_pos, s_neg);

  {
    auto row = out.item_row(triple.positive);
    for (std::size_t k = 0; k < dim; ++k) row[k] += g * query[k];
  }
  {
    auto row = out.item_row(triple.negative);
    for (std::size_t k = 0; k < dim; ++k) row[k] -= g * query[k];
  }
  std::vector<double> dq(dim);
  for (std::size_t k = 0; k < dim; ++k) dq[k] = g * (qi[k] - qj[k]);
  if (model.kind == ModelKind::kMF) {
    for (std::size_t k = 0; k < dim; ++k) out.user_grad[k] += dq[k];
  } else {
    backprop_hybrid(dq, triple.context, out);
  }
  out.loss = bpr_pair_loss(s_pos, s_neg) + add_row_regularization(model, lambda_theta, out);
}

void apply_gradient(FactorModel& model, const SparseGradient& grad, double eta) {
  auto p = model.user_factors.row(grad.user);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] -= eta * grad.user_grad[k];
  for (std::size_t r = 0; r < grad.items.size(); ++r) {
    auto q = model.item_factors.row(grad.items[r]);
    const auto g = grad.item_row_at(r);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] -= eta * g[k];
  }
  if (grad.has_boundary) model.boundaries[grad.user] -= eta * grad.boundary_grad;
}

// --- JointTrainer ----------------------------------------------------------

JointTrainer::JointTrainer(const TrainConfig& config, const InteractionLog& train)
    : config_(config),
      index_(train, config.kind),
      rng_(config.seed),
      sampler_(index_),
      total_(0),
      checkpoint_every_(0) {
  config_.validate();
  if (train.empty()) throw ContractError("cannot train on an empty log");
  model_ = init_model(config_.kind, config_.dim, train.num_users(), train.num_items(),
                      config_.anchor, rng_);
  total_ = train_epoch_schedule(config_, train.interactions.size());
  checkpoint_every_ = config_.checkpoint_every > 0 ? config_.checkpoint_every
                                                   : std::max<std::size_t>(1, train.interactions.size());
}

StepKind JointTrainer::step() {
  const std::size_t n = ++report_.iterations;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double z = unit(rng_);
  StepKind kind;
  if (z < config_.alpha) {
    kind = StepKind::kClassification;
    const auto example = sampler_.sample_classification_example(rng_, config_.negative_ratio);
    classification_gradient(model_, example,
                            {config_.lambda_theta, config_.lambda_t, config_.loss}, grad_);
    apply_gradient(model_, grad_, config_.eta);
    if (!std::isfinite(model_.boundaries[grad_.user])) throw TrainingDivergedError(n);
    ++report_.classification_steps;
    cf_sum_ += grad_.loss;
    ++cf_window_;
  } else {
    kind = StepKind::kRanking;
    const auto triple = sampler_.sample_ranking_triple(rng_);
    ranking_gradient(model_, triple, config_.lambda_theta, grad_);
    apply_gradient(model_, grad_, config_.eta);
    ++report_.ranking_steps;
    rk_sum_ += grad_.loss;
    ++rk_window_;
  }
  if (!std::isfinite(grad_.loss)) throw TrainingDivergedError(n);
  for (const double v : model_.user_factors.row(grad_.user)) {
    if (!std::isfinite(v)) throw TrainingDivergedError(n);
  }
  for (const ItemId i : grad_.items) {
    for (const double v : model_.item_factors.row(i)) {
      if (!std::isfinite(v)) throw TrainingDivergedError(n);
    }
  }
  if (n % checkpoint_every_ == 0) checkpoint();
  return kind;
}

void JointTrainer::checkpoint() {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  Checkpoint c;
  c.iteration = report_.iterations;
  c.cf_steps = cf_window_;
  c.rk_steps = rk_window_;
  c.cf_loss = cf_window_ > 0 ? cf_sum_ / static_cast<double>(cf_window_) : kNaN;
  c.rk_loss = rk_window_ > 0 ? rk_sum_ / static_cast<double>(rk_window_) : kNaN;
  report_.checkpoints.push_back(c);
  cf_sum_ = rk_sum_ = 0.0;
  cf_window_ = rk_window_ = 0;
}

void JointTrainer::run() {
  const auto start = std::chrono::steady_clock::now();
  while (report_.iterations < total_) step();
  if (report_.checkpoints.empty() || report_.checkpoints.back().iteration != report_.iterations) {
    if (report_.iterations > 0) checkpoint();
  }
  report_.skipped_samples = sampler_.skipped();
  report_.wall_seconds +=
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

TrainResult JointTrainer::finish() && {
  report_.skipped_samples = sampler_.skipped();
  return {std::move(model_), std::move(report_)};
}

TrainResult joint_train(const TrainConfig& config, const InteractionLog& train) {
  JointTrainer trainer(config, train);
  trainer.run();
  return std::move(trainer).finish();
}

}  // namespace dynak
