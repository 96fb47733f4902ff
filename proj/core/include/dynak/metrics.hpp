#pragma once

#include <span>
#include <vector>

#include "dynak/dataset.hpp"
#include "dynak/model.hpp"
#include "dynak/recommender.hpp"

namespace dynak {

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision |R n S| / |R|, recall |R n S| / |S| and their harmonic mean.
/// An empty list scores 0 on all three. `test` must be sorted and non-empty.
PrecisionRecall precision_recall_f1(std::span<const ItemId> list, std::span<const ItemId> test);

/// Binary-relevance NDCG over the first min(k, |R|) positions, normalized by
/// the DCG of min(k, |S|) hits at the top. `test` must be sorted and non-empty.
double ndcg_at_k(std::span<const ItemId> list, std::span<const ItemId> test, std::size_t k);

/// Fraction of lists that are non-empty. Throws ContractError when empty.
double cover_ratio(std::span<const RecommendationList> lists);

struct UserMetrics {
  UserId user = 0;
  bool covered = false;
  std::size_t list_size = 0;
  std::size_t hits = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ndcg = 0.0;
};

struct EvalReport {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double ndcg = 0.0;
  double cover_ratio = 0.0;
  std::size_t users_total = 0;
  std::size_t users_covered = 0;
  std::size_t users_skipped = 0;  ///< recommender failures
  std::vector<UserMetrics> per_user;  ///< sorted by user
};

/// Macro-averages F1, precision, recall and NDCG over covered users only;
/// cover ratio is covered / total. Records are reduced in user order, so the
/// result does not depend on the input order.
EvalReport aggregate(std::vector<UserMetrics> per_user);

struct EvalOptions {
  ListMode mode = ListMode::kDynamicK;
  std::size_t cutoff = kDefaultCap;  ///< cap (dynamic-K) or n (fixed-N)
  std::size_t k = kDefaultCap;       ///< NDCG depth
  bool exclude_seen = true;          ///< drop the user's train items from candidates
  /// When non-empty, only these users are evaluated.
  std::vector<UserId> users;
};

/// Builds each test user's list. HRM contexts are the user's latest train
/// session. Users whose list cannot be built are counted in `failures`.
std::vector<RecommendationList> recommend_for_split(const FactorModel& model,
                                                    const SplitDataset& split,
                                                    const EvalOptions& options,
                                                    std::size_t* failures = nullptr);

/// Scores ready-made lists against the held-out items. In fixed-N mode every
/// user counts as covered.
EvalReport evaluate_lists(std::span<const RecommendationList> lists, const TestSets& test,
                          std::size_t k, ListMode mode);

EvalReport evaluate_run(const FactorModel& model, const SplitDataset& split,
                        const EvalOptions& options);

/// Throws IncompatibleError unless the model and split share dimensions.
void check_compatible(const FactorModel& model, const InteractionLog& train);

}  // namespace dynak
