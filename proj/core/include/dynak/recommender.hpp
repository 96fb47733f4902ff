#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "dynak/dataset.hpp"
#include "dynak/model.hpp"

namespace dynak {

enum class ListMode {
  kDynamicK,  ///< every ranked item strictly above t_u, up to a cap
  kFixedN,    ///< the top N regardless of the boundary
};

std::string_view to_string(ListMode mode);

struct ScoredItem {
  ItemId item = 0;
  double score = 0.0;

  friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

struct RecommendationList {
  UserId user = 0;
  ListMode mode = ListMode::kDynamicK;
  std::vector<ScoredItem> entries;  ///< scores non-increasing, ties by item id

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

inline constexpr std::size_t kDefaultCap = 20;

/// Ranks `candidates` for `user` and keeps the prefix whose score is
/// strictly greater than the user's boundary, truncated to `cap`. The list
/// may be empty. HRM models need `context` (the user's latest basket).
RecommendationList recommend_dynamic_k(const FactorModel& model, UserId user,
                                       std::span<const ItemId> candidates,
                                       std::span<const ItemId> context = {},
                                       std::size_t cap = kDefaultCap);

/// The `n` best-scoring candidates (n >= 1), ignoring the boundary.
RecommendationList recommend_top_n(const FactorModel& model, UserId user,
                                   std::span<const ItemId> candidates,
                                   std::span<const ItemId> context, std::size_t n);

/// All items in [0, num_items) except the sorted `excluded` ones.
std::vector<ItemId> candidate_items(std::size_t num_items, std::span<const ItemId> excluded = {});

}  // namespace dynak
