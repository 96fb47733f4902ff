#include "dynak/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <limits>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "dynak/errors.hpp"

namespace dynak {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Splits one CSV record. Double-quoted fields may contain the delimiter;
// a doubled quote inside a quoted field is a literal quote.
std::vector<std::string> split_csv(std::string_view line, char sep) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == sep) {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.emplace_back(trim(cur));
  return fields;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  s = trim(s);
  Int value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return value;
}

bool is_number(std::string_view s) {
  s = trim(s);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return !s.empty() && ec == std::errc{} && ptr == s.data() + s.size();
}

// Days since 1970-01-01 for "YYYY-MM-DD[ ...]" or "M/D/YYYY[ ...]".
std::optional<std::int64_t> parse_date(std::string_view s) {
  s = trim(s);
  if (const auto space = s.find_first_of(" T"); space != std::string_view::npos) {
    s = s.substr(0, space);
  }
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (s.find('-') != std::string_view::npos) {
    const auto parts = split(s, '-');
    if (parts.size() != 3) return std::nullopt;
    const auto py = parse_int<int>(parts[0]);
    const auto pm = parse_int<unsigned>(parts[1]);
    const auto pd = parse_int<unsigned>(parts[2]);
    if (!py || !pm || !pd) return std::nullopt;
    y = *py;
    m = *pm;
    d = *pd;
  } else if (s.find('/') != std::string_view::npos) {
    const auto parts = split(s, '/');
    if (parts.size() != 3) return std::nullopt;
    const auto pm = parse_int<unsigned>(parts[0]);
    const auto pd = parse_int<unsigned>(parts[1]);
    const auto py = parse_int<int>(parts[2]);
    if (!py || !pm || !pd) return std::nullopt;
    y = *py;
    m = *pm;
    d = *pd;
  } else {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  if (days < 0) return std::nullopt;
  return days;
}

class Interner {
 public:
  explicit Interner(std::vector<std::string>& names) : names_(names) {}

  std::uint32_t intern(std::string_view name) {
    auto [it, inserted] =
        index_.try_emplace(std::string(name), static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.emplace_back(name);
    return it->second;
  }

 private:
  std::vector<std::string>& names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct InteractionHash {
  std::size_t operator()(const Interaction& x) const noexcept {
    std::size_t h = std::hash<std::uint64_t>{}((std::uint64_t{x.user} << 32) | x.item);
    h ^= std::hash<std::int64_t>{}(x.time) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    const std::int64_t b = x.basket ? *x.basket : -1;
    h ^= std::hash<std::int64_t>{}(b) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

void dedup_in_order(std::vector<Interaction>& xs) {
  std::unordered_set<Interaction, InteractionHash> seen;
  seen.reserve(xs.size());
  std::vector<Interaction> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    if (seen.insert(x).second) out.push_back(x);
  }
  xs = std::move(out);
}

}  // namespace

bool InteractionLog::has_baskets() const {
  return !interactions.empty() &&
         std::all_of(interactions.begin(), interactions.end(),
                     [](const Interaction& x) { return x.basket.has_value(); });
}

std::size_t InteractionLog::active_users() const {
  std::vector<bool> seen(num_users(), false);
  std::size_t n = 0;
  for (const auto& x : interactions) {
    if (!seen[x.user]) {
      seen[x.user] = true;
      ++n;
    }
  }
  return n;
}

std::size_t InteractionLog::active_items() const {
  std::vector<bool> seen(num_items(), false);
  std::size_t n = 0;
  for (const auto& x : interactions) {
    if (!seen[x.item]) {
      seen[x.item] = true;
      ++n;
    }
  }
  return n;
}

InteractionLog parse_movielens(std::istream& in) {
  InteractionLog log;
  Interner users(log.vocab.users);
  Interner items(log.vocab.items);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto fields = split(text, '\t');
    if (fields.size() != 4) {
      throw ParseError(lineno, "expected 4 tab-separated fields, got " +
                                   std::to_string(fields.size()));
    }
    const auto user = trim(fields[0]);
    const auto item = trim(fields[1]);
    if (user.empty() || item.empty()) throw ParseError(lineno, "empty user or item id");
    if (!is_number(fields[2])) throw ParseError(lineno, "rating is not numeric");
    const auto time = parse_int<std::int64_t>(fields[3]);
    if (!time || *time < 0) throw ParseError(lineno, "bad timestamp");
    log.interactions.push_back({users.intern(user), items.intern(item), *time, std::nullopt});
  }
  if (log.interactions.empty()) throw EmptyInputError("movielens input has no records");
  dedup_in_order(log.interactions);
  return log;
}

InteractionLog parse_tafeng(std::istream& in, const TafengColumns& columns) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split_csv(line, columns.delimiter);
      break;
    }
  }
  if (header.empty()) throw EmptyInputError("ta-feng input has no header");
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);

  auto column_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw SchemaError("missing required column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t date_col = column_index(columns.date);
  const std::size_t user_col = column_index(columns.user);
  const std::size_t item_col = column_index(columns.item);
  const std::size_t needed = std::max({date_col, user_col, item_col}) + 1;

  InteractionLog log;
  Interner users(log.vocab.users);
  Interner items(log.vocab.items);
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line, columns.delimiter);
    if (fields.size() < needed) {
      throw ParseError(lineno, "expected at least " + std::to_string(needed) + " fields");
    }
    const auto day = parse_date(fields[date_col]);
    if (!day) throw ParseError(lineno, "unparseable date '" + fields[date_col] + "'");
    if (fields[user_col].empty() || fields[item_col].empty()) {
      throw ParseError(lineno, "empty customer or product id");
    }
    log.interactions.push_back(
        {users.intern(fields[user_col]), items.intern(fields[item_col]), *day, std::nullopt});
  }
  if (log.interactions.empty()) throw EmptyInputError("ta-feng input has no records");
  dedup_in_order(log.interactions);

  // Basket index = rank of the user's distinct transaction dates.
  std::vector<std::vector<std::int64_t>> dates(log.num_users());
  for (const auto& x : log.interactions) dates[x.user].push_back(x.time);
  for (auto& d : dates) {
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
  }
  for (auto& x : log.interactions) {
    const auto& d = dates[x.user];
    x.basket = static_cast<std::int32_t>(std::lower_bound(d.begin(), d.end(), x.time) - d.begin());
  }
  return log;
}

InteractionLog filter_min_counts(const InteractionLog& log, std::size_t min_item_users,
                                 std::size_t min_user_items) {
  auto distinct_pairs = [](const std::vector<Interaction>& xs, bool by_item) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    pairs.reserve(xs.size());
    for (const auto& x : xs) {
      pairs.emplace_back(by_item ? x.item : x.user, by_item ? x.user : x.item);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
  };

  std::vector<std::size_t> item_users(log.num_items(), 0);
  for (const auto& [item, user] : distinct_pairs(log.interactions, true)) ++item_users[item];
  std::vector<Interaction> kept;
  kept.reserve(log.interactions.size());
  for (const auto& x : log.interactions) {
    if (item_users[x.item] >= min_item_users) kept.push_back(x);
  }

  std::vector<std::size_t> user_items(log.num_users(), 0);
  for (const auto& [user, item] : distinct_pairs(kept, false)) ++user_items[user];
  std::erase_if(kept, [&](const Interaction& x) { return user_items[x.user] < min_user_items; });

  constexpr auto kAbsent = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> user_map(log.num_users(), kAbsent);
  std::vector<std::uint32_t> item_map(log.num_items(), kAbsent);
  for (const auto& x : kept) {
    user_map[x.user] = 0;
    item_map[x.item] = 0;
  }
  InteractionLog out;
  for (std::size_t u = 0; u < user_map.size(); ++u) {
    if (user_map[u] == kAbsent) continue;
    user_map[u] = static_cast<std::uint32_t>(out.vocab.users.size());
    out.vocab.users.push_back(log.vocab.users[u]);
  }
  for (std::size_t i = 0; i < item_map.size(); ++i) {
    if (item_map[i] == kAbsent) continue;
    item_map[i] = static_cast<std::uint32_t>(out.vocab.items.size());
    out.vocab.items.push_back(log.vocab.items[i]);
  }
  out.interactions.reserve(kept.size());
  for (auto x : kept) {
    x.user = user_map[x.user];
    x.item = item_map[x.item];
    out.interactions.push_back(x);
  }
  return out;
}

SplitDataset temporal_split(const InteractionLog& log, SplitMode mode) {
  const bool basket_mode = mode == SplitMode::kBasket;
  if (basket_mode && !log.has_baskets()) {
    throw ContractError("basket split requires every interaction to carry a basket");
  }
  auto key = [basket_mode](const Interaction& x) -> std::int64_t {
    return basket_mode ? *x.basket : x.time;
  };

  constexpr auto kNone = std::numeric_limits<std::int64_t>::min();
  std::vector<std::int64_t> last(log.num_users(), kNone);
  std::vector<std::int64_t> first(log.num_users(), kNone);
  for (const auto& x : log.interactions) {
    const auto k = key(x);
    if (last[x.user] == kNone || k > last[x.user]) last[x.user] = k;
    if (first[x.user] == kNone || k < first[x.user]) first[x.user] = k;
  }

  SplitDataset split;
  split.train.vocab = log.vocab;
  std::vector<bool> dropped(log.num_users(), false);
  for (std::size_t u = 0; u < last.size(); ++u) {
    if (last[u] != kNone && first[u] == last[u]) {
      dropped[u] = true;
      ++split.dropped_users;
    }
  }
  for (const auto& x : log.interactions) {
    if (dropped[x.user]) continue;
    if (key(x) == last[x.user]) {
      split.test[x.user].push_back(x.item);
    } else {
      split.train.interactions.push_back(x);
    }
  }
  for (auto& [user, items] : split.test) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
  return split;
}

UserSessions group_sessions(const InteractionLog& log) {
  const bool by_basket = log.has_baskets();
  std::vector<std::map<std::int64_t, std::vector<ItemId>>> keyed(log.num_users());
  for (const auto& x : log.interactions) {
    keyed[x.user][by_basket ? *x.basket : x.time].push_back(x.item);
  }
  UserSessions sessions(log.num_users());
  for (std::size_t u = 0; u < keyed.size(); ++u) {
    sessions[u].reserve(keyed[u].size());
    for (auto& [k, items] : keyed[u]) {
      std::sort(items.begin(), items.end());
      items.erase(std::unique(items.begin(), items.end()), items.end());
      sessions[u].push_back(std::move(items));
    }
  }
  return sessions;
}

std::vector<std::vector<ItemId>> user_item_sets(const InteractionLog& log) {
  std::vector<std::vector<ItemId>> sets(log.num_users());
  for (const auto& x : log.interactions) sets[x.user].push_back(x.item);
  for (auto& s : sets) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  return sets;
}

}  // namespace dynak
