#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "dynak/errors.hpp"
#include "dynak/metrics.hpp"
#include "dynak/trainer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dynak;

namespace {

bool contains(std::span<const ItemId> sorted, ItemId i) {
  return std::binary_search(sorted.begin(), sorted.end(), i);
}

// Pointers to every parameter the gradient claims to touch, paired with the
// analytic value.
void check_against_finite_differences(FactorModel& model, const SparseGradient& grad,
                                      const std::function<double()>& objective) {
  std::vector<double*> coords;
  std::vector<double> analytic;
  for (std::size_t k = 0; k < model.dim(); ++k) {
    coords.push_back(&model.user_factors.row(grad.user)[k]);
    analytic.push_back(grad.user_grad[k]);
  }
  for (std::size_t r = 0; r < grad.items.size(); ++r) {
    for (std::size_t k = 0; k < model.dim(); ++k) {
      coords.push_back(&model.item_factors.row(grad.items[r])[k]);
      analytic.push_back(grad.item_row_at(r)[k]);
    }
  }
  if (grad.has_boundary) {
    coords.push_back(&model.boundaries[grad.user]);
    analytic.push_back(grad.boundary_grad);
  }
  const auto numeric = oracle::numeric_gradient(objective, coords);
  for (std::size_t c = 0; c < coords.size(); ++c) {
    // Absolute floor for coordinates whose true derivative is ~0.
    const double err = std::abs(analytic[c] - numeric[c]) /
                       std::max({std::abs(analytic[c]), std::abs(numeric[c]), 1e-3});
    CHECK(err <= 1e-4);
  }
}

TrainConfig small_config(ModelKind kind = ModelKind::kMF) {
  TrainConfig c;
  c.kind = kind;
  c.dim = 4;
  c.iterations = 2000;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("train_epoch_schedule multiplies epochs by interactions") {
  TrainConfig c;
  c.epochs = 1;
  CHECK(train_epoch_schedule(c, 100) == 100);
  c.epochs = 30;
  CHECK(train_epoch_schedule(c, 97852) == 2935560);
  c.iterations = 17;
  CHECK(train_epoch_schedule(c, 100) == 17);
  c.iterations = 0;
  c.epochs = 0;
  CHECK_THROWS_AS(train_epoch_schedule(c, 100), ConfigError);
}

TEST_CASE("TrainConfig rejects out-of-range values") {
  auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.alpha = 1.5; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.eta = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.lambda_t = -1.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.lambda_theta = -1.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.dim = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](TrainConfig& c) { c.epochs = 0; }).validate(), ConfigError);
  CHECK_NOTHROW(TrainConfig{}.validate());
}

TEST_CASE("ranking triples in a two-item world are forced") {
  const auto log = fixtures::make_log(1, 2, {{0, 0, 1}});
  const TrainingIndex index(log, ModelKind::kMF);
  ExampleSampler sampler(index);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) {
    const auto t = sampler.sample_ranking_triple(rng);
    CHECK(t.user == 0);
    CHECK(t.positive == 0);
    CHECK(t.negative == 1);
    CHECK(t.context.empty());
  }
}

TEST_CASE("ranking triples always pair a positive with a non-positive") {
  const auto log = fixtures::make_log(3, 6,
                                      {{0, 0, 1}, {0, 1, 2}, {0, 2, 3}, {1, 3, 1}, {2, 4, 1}, {2, 0, 2}});
  const TrainingIndex index(log, ModelKind::kMF);
  ExampleSampler sampler(index);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10000; ++k) {
    const auto t = sampler.sample_ranking_triple(rng);
    CHECK(contains(index.positives(t.user), t.positive));
    CHECK_FALSE(contains(index.positives(t.user), t.negative));
  }
}

TEST_CASE("HRM triples carry the previous basket as context") {
  const auto log = fixtures::make_basket_log(1, 3, {{0, 0, 0}, {0, 1, 1}});
  const TrainingIndex index(log, ModelKind::kHRM);
  REQUIRE(index.events().size() == 1);
  ExampleSampler sampler(index);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 200; ++k) {
    const auto t = sampler.sample_ranking_triple(rng);
    CHECK(t.positive == 1);
    CHECK(std::vector<ItemId>(t.context.begin(), t.context.end()) == std::vector<ItemId>{0});
    CHECK(t.negative != 1);
  }
}

TEST_CASE("HRM negatives avoid only the target basket") {
  const auto log = fixtures::make_basket_log(1, 2, {{0, 0, 0}, {0, 1, 1}});
  const TrainingIndex index(log, ModelKind::kHRM);
  ExampleSampler sampler(index);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 50; ++k) CHECK(sampler.sample_ranking_triple(rng).negative == 0);
}

TEST_CASE("classification draws are balanced by negative_ratio") {
  const auto log = fixtures::random_log(20, 50, 6, 2);
  const TrainingIndex index(log, ModelKind::kMF);
  ExampleSampler sampler(index);
  std::mt19937_64 rng(7);
  std::size_t positives = 0;
  const std::size_t n = 100000;
  for (std::size_t k = 0; k < n; ++k) {
    const auto e = sampler.sample_classification_example(rng, 1.0);
    if (e.label == 1) {
      ++positives;
      CHECK(contains(index.positives(e.user), e.item));
    } else {
      CHECK(e.label == -1);
      CHECK_FALSE(contains(index.positives(e.user), e.item));
    }
  }
  CHECK(static_cast<double>(positives) / n == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::abs(static_cast<double>(positives) / n - 0.5) <= 0.01);

  for (int k = 0; k < 1000; ++k) CHECK(sampler.sample_classification_example(rng, 0.0).label == 1);
}

TEST_CASE("users holding every item are skipped, then sampling fails") {
  const auto mixed = fixtures::make_log(2, 2, {{0, 0, 1}, {0, 1, 2}, {1, 0, 1}});
  const TrainingIndex index(mixed, ModelKind::kMF);
  ExampleSampler sampler(index);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) CHECK(sampler.sample_ranking_triple(rng).user == 1);
  CHECK(sampler.skipped() > 0);

  const auto full = fixtures::make_log(1, 2, {{0, 0, 1}, {0, 1, 2}});
  const TrainingIndex saturated(full, ModelKind::kMF);
  ExampleSampler stuck(saturated);
  CHECK_THROWS_AS(stuck.sample_ranking_triple(rng), SamplingError);
}

TEST_CASE("classification gradient matches finite differences") {
  std::mt19937_64 rng(21);
  const Regularization reg{0.05, 0.7, ClassificationLoss::kLogistic};
  for (const auto kind : {ModelKind::kMF, ModelKind::kHRM}) {
    for (int point = 0; point < 100; ++point) {
      auto model = fixtures::random_model(kind, 5, 4, 8, 1000 + point);
      const std::vector<ItemId> context{1, 3, 6};
      LabeledExample e;
      e.user = static_cast<UserId>(rng() % 4);
      e.item = static_cast<ItemId>(rng() % 8);
      e.label = rng() % 2 ? 1 : -1;
      if (kind == ModelKind::kHRM) e.context = context;
      SparseGradient grad;
      classification_gradient(model, e, reg, grad);
      CHECK(grad.has_boundary);
      CHECK(grad.loss == doctest::Approx(classification_objective(model, e, reg)));
      check_against_finite_differences(model, grad,
                                       [&] { return classification_objective(model, e, reg); });
    }
  }
}

TEST_CASE("ranking gradient matches finite differences") {
  std::mt19937_64 rng(22);
  for (const auto kind : {ModelKind::kMF, ModelKind::kHRM}) {
    for (int point = 0; point < 100; ++point) {
      auto model = fixtures::random_model(kind, 5, 4, 8, 2000 + point);
      const std::vector<ItemId> context{0, 2, 5};
      RankingTriple t;
      t.user = static_cast<UserId>(rng() % 4);
      t.positive = static_cast<ItemId>(rng() % 8);
      t.negative = static_cast<ItemId>((t.positive + 1 + rng() % 7) % 8);
      if (kind == ModelKind::kHRM) t.context = context;
      SparseGradient grad;
      ranking_gradient(model, t, 0.05, grad);
      CHECK_FALSE(grad.has_boundary);
      check_against_finite_differences(model, grad, [&] { return ranking_objective(model, t, 0.05); });
    }
  }
}

TEST_CASE("HRM context rows receive a share of the score gradient") {
  auto model = fixtures::random_model(ModelKind::kHRM, 3, 1, 4, 5);
  const std::vector<ItemId> context{0, 1};
  RankingTriple t{0, 2, 3, context};
  SparseGradient grad;
  ranking_gradient(model, t, 0.0, grad);
  std::set<ItemId> touched(grad.items.begin(), grad.items.end());
  CHECK(touched == std::set<ItemId>{0, 1, 2, 3});
}

TEST_CASE("alpha = 0 leaves every boundary at the anchor") {
  auto c = small_config();
  c.alpha = 0.0;
  c.anchor = 1.25;
  const auto log = fixtures::random_log(10, 30, 6, 1);
  const auto result = joint_train(c, log);
  for (double t : result.model.boundaries) CHECK(t == 1.25);
  CHECK(result.report.classification_steps == 0);
  CHECK(result.report.ranking_steps == c.iterations);
}

TEST_CASE("alpha = 1 never takes a ranking step") {
  auto c = small_config();
  c.alpha = 1.0;
  c.checkpoint_every = 500;
  const auto result = joint_train(c, fixtures::random_log(10, 30, 6, 1));
  CHECK(result.report.ranking_steps == 0);
  for (const auto& cp : result.report.checkpoints) {
    CHECK(cp.rk_steps == 0);
    CHECK(std::isnan(cp.rk_loss));
  }
}

TEST_CASE("branch frequency tracks alpha") {
  auto c = small_config();
  c.alpha = 0.3;
  c.iterations = 100000;
  JointTrainer trainer(c, fixtures::random_log(20, 40, 6, 8));
  std::size_t cf = 0;
  for (std::size_t n = 0; n < c.iterations; ++n) {
    if (trainer.step() == StepKind::kClassification) ++cf;
  }
  CHECK(std::abs(static_cast<double>(cf) / c.iterations - 0.3) <= 0.01);
}

TEST_CASE("each step only changes the rows it samples") {
  for (const auto kind : {ModelKind::kMF, ModelKind::kHRM}) {
    auto c = small_config(kind);
    const auto log = fixtures::random_log(8, 25, 6, 4);
    JointTrainer trainer(c, log);
    for (int n = 0; n < 300; ++n) {
      const FactorModel before = trainer.model();
      const auto kind_of_step = trainer.step();
      const auto& after = trainer.model();
      std::vector<UserId> users;
      for (UserId u = 0; u < after.num_users(); ++u) {
        const auto a = before.user_factors.row(u);
        if (!std::equal(a.begin(), a.end(), after.user_factors.row(u).begin())) users.push_back(u);
      }
      std::size_t items = 0;
      for (ItemId i = 0; i < after.num_items(); ++i) {
        const auto a = before.item_factors.row(i);
        if (!std::equal(a.begin(), a.end(), after.item_factors.row(i).begin())) ++items;
      }
      std::vector<UserId> bounds;
      for (UserId u = 0; u < after.num_users(); ++u) {
        if (before.boundaries[u] != after.boundaries[u]) bounds.push_back(u);
      }
      CHECK(users.size() <= 1);
      // MF: target and negative. HRM: plus a two-item context basket.
      CHECK(items <= (kind == ModelKind::kMF ? 2u : 4u));
      if (kind_of_step == StepKind::kRanking) {
        CHECK(bounds.empty());
      } else {
        CHECK(bounds.size() <= 1);
        if (!bounds.empty() && !users.empty()) CHECK(bounds[0] == users[0]);
      }
    }
  }
}

TEST_CASE("training is deterministic in the seed") {
  auto c = small_config(ModelKind::kHRM);
  const auto log = fixtures::random_log(10, 30, 6, 6);
  const auto a = joint_train(c, log);
  const auto b = joint_train(c, log);
  CHECK(a.model == b.model);
  c.seed = 12;
  CHECK_FALSE(joint_train(c, log).model == a.model);
}

TEST_CASE("classification loss falls on the block instance") {
  const auto split = fixtures::block_split();
  TrainConfig c;
  c.dim = 4;
  c.iterations = 50000;
  c.eta = 0.05;
  c.checkpoint_every = 5000;
  const auto result = joint_train(c, split.train);
  const auto& cps = result.report.checkpoints;
  REQUIRE(cps.size() == 10);
  CHECK(cps.back().cf_loss < cps.front().cf_loss);
  CHECK(result.model.all_finite());
  for (std::size_t k = 1; k < cps.size(); ++k) CHECK(cps[k].iteration > cps[k - 1].iteration);
}

TEST_CASE("divergence is reported with the iteration") {
  auto c = small_config();
  c.eta = 1e6;
  c.lambda_theta = 0.0;
  c.iterations = 100000;
  try {
    joint_train(c, fixtures::random_log(10, 30, 6, 1));
    FAIL("expected divergence");
  } catch (const TrainingDivergedError& e) {
    CHECK(e.iteration() >= 1);
    CHECK(e.iteration() <= c.iterations);
  }
}

TEST_CASE("sampled training agrees with full-batch descent on the block instance") {
  const auto split = fixtures::block_split();
  std::vector<std::set<ItemId>> positives(5);
  std::vector<std::set<ItemId>> test(5);
  for (const auto& x : split.train.interactions) positives[x.user].insert(x.item);
  for (const auto& [u, items] : split.test) test[u].insert(items.begin(), items.end());

  TrainConfig c;
  c.dim = 2;
  c.iterations = 50000;
  c.seed = 5;
  const auto sgd = joint_train(c, split.train).model;
  const auto batch = oracle::full_batch_descent(init_model(ModelKind::kMF, 2, 5, 6, 1.0, 5),
                                                positives, oracle::BatchConfig{});
  const double f_sgd = oracle::dynamic_f1(sgd, positives, test);
  const double f_batch = oracle::dynamic_f1(batch, positives, test);
  MESSAGE("sgd f1 " << f_sgd << ", full batch f1 " << f_batch);
  CHECK(std::abs(f_sgd - f_batch) <= 0.05);

  EvalOptions opts;
  const auto report = evaluate_run(sgd, split, opts);
  CHECK(report.f1 == doctest::Approx(f_sgd).epsilon(1e-12));
}
