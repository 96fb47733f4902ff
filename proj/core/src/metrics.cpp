#include "dynak/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dynak/errors.hpp"

namespace dynak {

namespace {

std::size_t count_hits(std::span<const ItemId> list, std::span<const ItemId> test) {
  std::size_t hits = 0;
  for (const ItemId i : list) {
    if (std::binary_search(test.begin(), test.end(), i)) ++hits;
  }
  return hits;
}

void require_test(std::span<const ItemId> test) {
  if (test.empty()) throw ContractError("metrics need a non-empty test set");
}

std::vector<ItemId> items_of(const RecommendationList& list) {
  std::vector<ItemId> items;
  items.reserve(list.size());
  for (const auto& e : list.entries) items.push_back(e.item);
  return items;
}

}  // namespace

PrecisionRecall precision_recall_f1(std::span<const ItemId> list, std::span<const ItemId> test) {
  require_test(test);
  PrecisionRecall out;
  if (list.empty()) return out;
  const auto hits = static_cast<double>(count_hits(list, test));
  out.precision = hits / static_cast<double>(list.size());
  out.recall = hits / static_cast<double>(test.size());
  const double sum = out.precision + out.recall;
  out.f1 = sum > 0.0 ? 2.0 * out.precision * out.recall / sum : 0.0;
  return out;
}

double ndcg_at_k(std::span<const ItemId> list, std::span<const ItemId> test, std::size_t k) {
  require_test(test);
  if (k == 0) throw ContractError("ndcg needs k >= 1");
  if (list.empty()) return 0.0;
  double dcg = 0.0;
  const std::size_t depth = std::min(k, list.size());
  for (std::size_t j = 1; j <= depth; ++j) {
    const double gain = std::binary_search(test.begin(), test.end(), list[j - 1]) ? 1.0 : 0.0;
    dcg += gain / std::log2(static_cast<double>(j) + 1.0);
  }
  double ideal = 0.0;
  const std::size_t ideal_hits = std::min(k, test.size());
  for (std::size_t j = 1; j <= ideal_hits; ++j) {
    ideal += 1.0 / std::log2(static_cast<double>(j) + 1.0);
  }
  return dcg / ideal;
}

double cover_ratio(std::span<const RecommendationList> lists) {
  if (lists.empty()) throw ContractError("cover ratio over zero users");
  const auto covered = std::count_if(lists.begin(), lists.end(),
                                     [](const RecommendationList& l) { return !l.empty(); });
  return static_cast<double>(covered) / static_cast<double>(lists.size());
}

EvalReport aggregate(std::vector<UserMetrics> per_user) {
  std::sort(per_user.begin(), per_user.end(),
            [](const UserMetrics& a, const UserMetrics& b) { return a.user < b.user; });
  EvalReport report;
  report.users_total = per_user.size();
  for (const auto& m : per_user) {
    if (!m.covered) continue;
    ++report.users_covered;
    report.f1 += m.f1;
    report.precision += m.precision;
    report.recall += m.recall;
    report.ndcg += m.ndcg;
  }
  if (report.users_covered > 0) {
    const auto n = static_cast<double>(report.users_covered);
    report.f1 /= n;
    report.precision /= n;
    report.recall /= n;
    report.ndcg /= n;
  }
  if (report.users_total > 0) {
    report.cover_ratio =
        static_cast<double>(report.users_covered) / static_cast<double>(report.users_total);
  }
  report.per_user = std::move(per_user);
  return report;
}

void check_compatible(const FactorModel& model, const InteractionLog& train) {
  if (model.num_users() != train.num_users() || model.num_items() != train.num_items()) {
    throw IncompatibleError("incompatible model: users=" + std::to_string(model.num_users()) +
                            " items=" + std::to_string(model.num_items()) +
                            " but dataset has users=" + std::to_string(train.num_users()) +
                            " items=" + std::to_string(train.num_items()));
  }
}

std::vector<RecommendationList> recommend_for_split(const FactorModel& model,
                                                    const SplitDataset& split,
                                                    const EvalOptions& options,
                                                    std::size_t* failures) {
  check_compatible(model, split.train);
  const auto seen = options.exclude_seen ? user_item_sets(split.train)
                                         : std::vector<std::vector<ItemId>>{};
  const auto sessions = model.kind == ModelKind::kHRM ? group_sessions(split.train)
                                                      : UserSessions{};
  std::vector<UserId> users = options.users;
  if (users.empty()) {
    for (const auto& [u, items] : split.test) users.push_back(u);
  }
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());

  std::size_t failed = 0;
  std::vector<RecommendationList> lists;
  lists.reserve(users.size());
  const auto all_items = candidate_items(model.num_items());
  for (const UserId u : users) {
    try {
      std::vector<ItemId> filtered;
      std::span<const ItemId> candidates = all_items;
      if (options.exclude_seen && u < seen.size()) {
        filtered = candidate_items(model.num_items(), seen[u]);
        candidates = filtered;
      }
      std::span<const ItemId> context;
      if (model.kind == ModelKind::kHRM && u < sessions.size() && !sessions[u].empty()) {
        context = sessions[u].back();
      }
      lists.push_back(options.mode == ListMode::kDynamicK
                          ? recommend_dynamic_k(model, u, candidates, context, options.cutoff)
                          : recommend_top_n(model, u, candidates, context, options.cutoff));
    } catch (const Error&) {
      ++failed;
    }
  }
  if (failures != nullptr) *failures = failed;
  return lists;
}

EvalReport evaluate_lists(std::span<const RecommendationList> lists, const TestSets& test,
                          std::size_t k, ListMode mode) {
  std::vector<UserMetrics> per_user;
  per_user.reserve(lists.size());
  for (const auto& list : lists) {
    const auto it = test.find(list.user);
    if (it == test.end() || it->second.empty()) {
      throw ContractError("user " + std::to_string(list.user) + " has no held-out items");
    }
    const auto items = items_of(list);
    const auto pr = precision_recall_f1(items, it->second);
    UserMetrics m;
    m.user = list.user;
    m.covered = mode == ListMode::kFixedN || !list.empty();
    m.list_size = list.size();
    m.hits = count_hits(items, it->second);
    m.precision = pr.precision;
    m.recall = pr.recall;
    m.f1 = pr.f1;
    m.ndcg = ndcg_at_k(items, it->second, k);
    per_user.push_back(m);
  }
  return aggregate(std::move(per_user));
}

EvalReport evaluate_run(const FactorModel& model, const SplitDataset& split,
                        const EvalOptions& options) {
  if (split.test.empty()) throw ContractError("split has no test users");
  std::size_t failures = 0;
  const auto lists = recommend_for_split(model, split, options, &failures);
  auto report = evaluate_lists(lists, split.test, options.k, options.mode);
  report.users_skipped = failures;
  return report;
}

}  // namespace dynak
