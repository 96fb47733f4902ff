#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dynak {

// Dense, zero-based indices into an InteractionLog's vocabulary.
using UserId = std::uint32_t;
using ItemId = std::uint32_t;

/// One implicit-feedback event. `time` is seconds (MovieLens) or days since
/// 1970-01-01 (Ta-Feng). `basket` is set only for transactional sources.
struct Interaction {
  UserId user = 0;
  ItemId item = 0;
  std::int64_t time = 0;
  std::optional<std::int32_t> basket;

  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

/// Maps dense indices back to the ids found in the raw source files.
struct Vocabulary {
  std::vector<std::string> users;
  std::vector<std::string> items;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

struct InteractionLog {
  std::vector<Interaction> interactions;
  Vocabulary vocab;

  std::size_t num_users() const { return vocab.users.size(); }
  std::size_t num_items() const { return vocab.items.size(); }
  bool empty() const { return interactions.empty(); }
  /// True iff every interaction carries a basket index.
  bool has_baskets() const;
  /// Number of distinct users that occur in `interactions`.
  std::size_t active_users() const;
  std::size_t active_items() const;

  friend bool operator==(const InteractionLog&, const InteractionLog&) = default;
};

/// Held-out items per user; each vector is sorted and unique.
using TestSets = std::map<UserId, std::vector<ItemId>>;

struct SplitDataset {
  InteractionLog train;
  TestSets test;
  /// Users excluded because they had a single timestamp (or basket).
  std::size_t dropped_users = 0;

  friend bool operator==(const SplitDataset&, const SplitDataset&) = default;
};

enum class SplitMode {
  kBasket,    ///< hold out each user's chronologically last basket
  kLastItem,  ///< hold out every item at the user's maximum timestamp
};

/// CSV layout for Ta-Feng style transaction files.
struct TafengColumns {
  std::string date = "TRANSACTION_DT";
  std::string user = "CUSTOMER_ID";
  std::string item = "PRODUCT_ID";
  char delimiter = ',';
};

/// Parses MovieLens `u.data`: user<TAB>item<TAB>rating<TAB>timestamp. The
/// rating column is discarded.
InteractionLog parse_movielens(std::istream& in);

/// Parses a headed Ta-Feng transaction CSV. Dates may be `YYYY-MM-DD`
/// (optionally followed by a time of day) or `M/D/YYYY`. Each user's
/// distinct dates become baskets 0, 1, ... in chronological order, and
/// repeated (user, item, date) rows collapse to one interaction.
InteractionLog parse_tafeng(std::istream& in, const TafengColumns& columns = {});

/// Removes items bought by fewer than `min_item_users` distinct users, then
/// users left with fewer than `min_user_items` distinct items. One pass of
/// each, in that order. Survivors are re-indexed densely, preserving order.
InteractionLog filter_min_counts(const InteractionLog& log,
                                 std::size_t min_item_users,
                                 std::size_t min_user_items);

/// Leave-last-out split by time. The train log keeps the full vocabulary of
/// `log` so that model dimensions do not depend on the split.
SplitDataset temporal_split(const InteractionLog& log, SplitMode mode);

/// Per-user chronological sessions: groups of items sharing a basket index,
/// or a timestamp when the log has no baskets. Items in a session are
/// sorted and unique. Indexed by UserId; users without events get none.
using UserSessions = std::vector<std::vector<std::vector<ItemId>>>;
UserSessions group_sessions(const InteractionLog& log);

/// Sorted distinct items per user (B+_u).
std::vector<std::vector<ItemId>> user_item_sets(const InteractionLog& log);

}  // namespace dynak
