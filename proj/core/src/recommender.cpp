#include "dynak/recommender.hpp"

#include <algorithm>
#include <string>

#include "dynak/errors.hpp"

namespace dynak {

namespace {

bool ranks_before(const ScoredItem& a, const ScoredItem& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item < b.item;
}

// Scores every candidate and returns the best `limit` of them in rank order.
std::vector<ScoredItem> ranked_prefix(const FactorModel& model, UserId user,
                                      std::span<const ItemId> candidates,
                                      std::span<const ItemId> context, std::size_t limit) {
  if (user >= model.num_users()) {
    throw LookupError("unknown user index " + std::to_string(user));
  }
  const UserScorer scorer(model, user, context);
  std::vector<ScoredItem> scored;
  scored.reserve(candidates.size());
  for (const ItemId i : candidates) scored.push_back({i, scorer(i)});
  limit = std::min(limit, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(limit),
                    scored.end(), ranks_before);
  scored.resize(limit);
  return scored;
}

}  // namespace

std::string_view to_string(ListMode mode) {
  return mode == ListMode::kDynamicK ? "dynamic-k" : "fixed-n";
}

RecommendationList recommend_dynamic_k(const FactorModel& model, UserId user,
                                       std::span<const ItemId> candidates,
                                       std::span<const ItemId> context, std::size_t cap) {
  RecommendationList list{user, ListMode::kDynamicK, {}};
  list.entries = ranked_prefix(model, user, candidates, context, cap);
  const double boundary = model.boundaries[user];
  const auto cut = std::find_if(list.entries.begin(), list.entries.end(),
                                [boundary](const ScoredItem& e) { return !(e.score > boundary); });
  list.entries.erase(cut, list.entries.end());
  return list;
}

RecommendationList recommend_top_n(const FactorModel& model, UserId user,
                                   std::span<const ItemId> candidates,
                                   std::span<const ItemId> context, std::size_t n) {
  if (n == 0) throw ContractError("top-n recommendation needs n >= 1");
  return {user, ListMode::kFixedN, ranked_prefix(model, user, candidates, context, n)};
}

std::vector<ItemId> candidate_items(std::size_t num_items, std::span<const ItemId> excluded) {
  std::vector<ItemId> out;
  out.reserve(num_items);
  auto ex = excluded.begin();
  for (ItemId i = 0; i < num_items; ++i) {
    while (ex != excluded.end() && *ex < i) ++ex;
    if (ex != excluded.end() && *ex == i) continue;
    out.push_back(i);
  }
  return out;
}

}  // namespace dynak
