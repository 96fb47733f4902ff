#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "dynak/metrics.hpp"
#include "dynak/recommender.hpp"
#include "dynak/trainer.hpp"

using namespace dynak;

namespace {

InteractionLog synthetic_log(std::size_t users, std::size_t items, std::size_t per_user) {
  InteractionLog log;
  std::mt19937_64 rng(7);
  for (std::size_t u = 0; u < users; ++u) {
    log.vocab.users.push_back("u" + std::to_string(u));
    for (std::size_t k = 0; k < per_user; ++k) {
      log.interactions.push_back({static_cast<UserId>(u), static_cast<ItemId>(rng() % items),
                                  static_cast<std::int64_t>(k / 2), static_cast<std::int32_t>(k / 2)});
    }
  }
  for (std::size_t i = 0; i < items; ++i) log.vocab.items.push_back("i" + std::to_string(i));
  return log;
}

void BM_RecommendDynamicK(benchmark::State& state) {
  const auto items = static_cast<std::size_t>(state.range(0));
  const auto model = init_model(ModelKind::kMF, 50, 1, items, 0.0, 1);
  const auto candidates = candidate_items(items);
  for (auto _ : state) benchmark::DoNotOptimize(recommend_dynamic_k(model, 0, candidates));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(items));
}
BENCHMARK(BM_RecommendDynamicK)->Arg(1682)->Arg(23812);

void BM_RecommendHrm(benchmark::State& state) {
  const std::size_t items = 1682;
  const auto model = init_model(ModelKind::kHRM, 50, 1, items, 0.0, 1);
  const auto candidates = candidate_items(items);
  const std::vector<ItemId> context{1, 2, 3, 4};
  for (auto _ : state) benchmark::DoNotOptimize(recommend_top_n(model, 0, candidates, context, 10));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(items));
}
BENCHMARK(BM_RecommendHrm);

void BM_TrainSteps(benchmark::State& state) {
  const auto log = synthetic_log(500, 1000, 40);
  TrainConfig c;
  c.kind = state.range(0) == 0 ? ModelKind::kMF : ModelKind::kHRM;
  c.iterations = 100000;
  for (auto _ : state) benchmark::DoNotOptimize(joint_train(c, log));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.iterations));
}
BENCHMARK(BM_TrainSteps)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Metrics(benchmark::State& state) {
  std::vector<ItemId> list(20);
  std::iota(list.begin(), list.end(), 0);
  const std::vector<ItemId> test{3, 11, 17, 40};
  for (auto _ : state) {
    benchmark::DoNotOptimize(precision_recall_f1(list, test));
    benchmark::DoNotOptimize(ndcg_at_k(list, test, 20));
  }
}
BENCHMARK(BM_Metrics);

}  // namespace

BENCHMARK_MAIN();
