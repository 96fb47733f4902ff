#pragma once

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "dynak/dataset.hpp"
#include "dynak/model.hpp"

namespace fixtures {

// Builds a log over dense ids 0..users-1 / 0..items-1 named by their index.
inline dynak::InteractionLog make_log(std::size_t users, std::size_t items,
                                      std::initializer_list<std::tuple<int, int, long>> rows) {
  dynak::InteractionLog log;
  for (std::size_t u = 0; u < users; ++u) log.vocab.users.push_back(std::to_string(u));
  for (std::size_t i = 0; i < items; ++i) log.vocab.items.push_back(std::to_string(i));
  for (const auto& [u, i, t] : rows) {
    log.interactions.push_back({static_cast<dynak::UserId>(u), static_cast<dynak::ItemId>(i), t,
                                std::nullopt});
  }
  return log;
}

// Same, with basket = time.
inline dynak::InteractionLog make_basket_log(
    std::size_t users, std::size_t items, std::initializer_list<std::tuple<int, int, int>> rows) {
  dynak::InteractionLog log;
  for (std::size_t u = 0; u < users; ++u) log.vocab.users.push_back(std::to_string(u));
  for (std::size_t i = 0; i < items; ++i) log.vocab.items.push_back(std::to_string(i));
  for (const auto& [u, i, b] : rows) {
    log.interactions.push_back(
        {static_cast<dynak::UserId>(u), static_cast<dynak::ItemId>(i), b, b});
  }
  return log;
}

// Two preference blocks: users 0-2 like items 0-2, users 3-4 like items 3-5.
// Each user contributes two train items and holds out the third of the block.
inline dynak::SplitDataset block_split() {
  dynak::SplitDataset split;
  split.train = make_log(5, 6,
                         {{0, 0, 1}, {0, 1, 2}, {1, 1, 1}, {1, 2, 2}, {2, 0, 1}, {2, 2, 2},
                          {3, 3, 1}, {3, 4, 2}, {4, 4, 1}, {4, 5, 2}});
  split.test = {{0, {2}}, {1, {0}}, {2, {1}}, {3, {5}}, {4, {3}}};
  return split;
}

// A random basket log: each user holds `per_user` distinct items, two per basket.
inline dynak::InteractionLog random_log(std::size_t users, std::size_t items, std::size_t per_user,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  dynak::InteractionLog log;
  for (std::size_t u = 0; u < users; ++u) log.vocab.users.push_back("u" + std::to_string(u));
  for (std::size_t i = 0; i < items; ++i) log.vocab.items.push_back("i" + std::to_string(i));
  std::uniform_int_distribution<dynak::ItemId> item(0, static_cast<dynak::ItemId>(items - 1));
  for (dynak::UserId u = 0; u < users; ++u) {
    std::vector<dynak::ItemId> chosen;
    while (chosen.size() < per_user) {
      const auto i = item(rng);
      if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
    }
    for (std::size_t k = 0; k < chosen.size(); ++k) {
      log.interactions.push_back({u, chosen[k], static_cast<std::int64_t>(k / 2),
                                  static_cast<std::int32_t>(k / 2)});
    }
  }
  return log;
}

inline dynak::FactorModel random_model(dynak::ModelKind kind, std::size_t dim, std::size_t users,
                                       std::size_t items, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  auto model = dynak::init_model(kind, dim, users, items, 1.0, seed);
  for (auto& v : model.user_factors.values()) v = n(rng);
  for (auto& v : model.item_factors.values()) v = n(rng);
  for (auto& t : model.boundaries) t = 1.0 + n(rng);
  return model;
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("dynak-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
