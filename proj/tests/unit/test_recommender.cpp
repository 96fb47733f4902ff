#include <algorithm>
#include <random>

#include "doctest.h"
#include "dynak/errors.hpp"
#include "dynak/recommender.hpp"
#include "fixtures.hpp"

using namespace dynak;

namespace {

// One-dimensional MF model: user factor 1, so score(i) = item value.
FactorModel scored(std::initializer_list<double> item_scores, double boundary) {
  auto m = init_model(ModelKind::kMF, 1, 1, item_scores.size(), boundary, 1);
  m.user_factors.row(0)[0] = 1.0;
  ItemId i = 0;
  for (double s : item_scores) m.item_factors.row(i++)[0] = s;
  return m;
}

std::vector<ItemId> ids(const RecommendationList& list) {
  std::vector<ItemId> out;
  for (const auto& e : list.entries) out.push_back(e.item);
  return out;
}

}  // namespace

TEST_CASE("dynamic-K keeps the items above the boundary") {
  const auto m = scored({2.5, 1.9, 0.3}, 1.0);
  const auto all = candidate_items(3);
  const auto list = recommend_dynamic_k(m, 0, all);
  CHECK(ids(list) == std::vector<ItemId>{0, 1});
  CHECK(list.mode == ListMode::kDynamicK);
  CHECK(list.entries[0].score == 2.5);
}

TEST_CASE("dynamic-K may recommend nothing") {
  const auto m = scored({2.5, 1.9, 0.3}, 3.0);
  CHECK(recommend_dynamic_k(m, 0, candidate_items(3)).empty());
}

TEST_CASE("dynamic-K truncates to the cap") {
  const auto m = scored({2.5, 1.9, 0.3}, 1.0);
  CHECK(ids(recommend_dynamic_k(m, 0, candidate_items(3), {}, 1)) == std::vector<ItemId>{0});
}

TEST_CASE("dynamic-K excludes scores equal to the boundary") {
  const auto m = scored({1.0, 2.0}, 1.0);
  CHECK(ids(recommend_dynamic_k(m, 0, candidate_items(2))) == std::vector<ItemId>{1});
}

TEST_CASE("top-N ignores the boundary") {
  const auto m = scored({2.5, 1.9, 0.3}, 100.0);
  CHECK(ids(recommend_top_n(m, 0, candidate_items(3), {}, 3)) == std::vector<ItemId>{0, 1, 2});
  CHECK(ids(recommend_top_n(m, 0, candidate_items(3), {}, 1)) == std::vector<ItemId>{0});
  CHECK(ids(recommend_top_n(m, 0, candidate_items(3), {}, 10)).size() == 3);
  CHECK(recommend_top_n(m, 0, candidate_items(3), {}, 1).mode == ListMode::kFixedN);
  CHECK_THROWS_AS(recommend_top_n(m, 0, candidate_items(3), {}, 0), ContractError);
}

TEST_CASE("ties break towards the lower item id") {
  const auto m = scored({0.7, 1.5, 1.5, 0.7}, 0.0);
  std::vector<ItemId> shuffled{3, 2, 0, 1};
  CHECK(ids(recommend_top_n(m, 0, shuffled, {}, 4)) == std::vector<ItemId>{1, 2, 0, 3});
}

TEST_CASE("candidate_items drops the excluded ids") {
  const std::vector<ItemId> seen{1, 3};
  CHECK(candidate_items(5, seen) == std::vector<ItemId>{0, 2, 4});
  CHECK(candidate_items(2).size() == 2);
}

TEST_CASE("recommender errors") {
  const auto m = scored({1.0}, 0.0);
  CHECK_THROWS_AS(recommend_dynamic_k(m, 1, candidate_items(1)), LookupError);
  const auto hrm = fixtures::random_model(ModelKind::kHRM, 3, 2, 4, 1);
  CHECK_THROWS_AS(recommend_dynamic_k(hrm, 0, candidate_items(4)), ContractError);
  const std::vector<ItemId> ctx{2};
  CHECK_NOTHROW(recommend_dynamic_k(hrm, 0, candidate_items(4), ctx));
}

TEST_CASE("dynamic-K is a prefix of top-N at the cap") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto m = fixtures::random_model(ModelKind::kMF, 4, 6, 40, seed);
    const auto cands = candidate_items(40);
    for (UserId u = 0; u < 6; ++u) {
      const auto dk = ids(recommend_dynamic_k(m, u, cands, {}, 10));
      const auto top = ids(recommend_top_n(m, u, cands, {}, 10));
      REQUIRE(dk.size() <= top.size());
      CHECK(std::equal(dk.begin(), dk.end(), top.begin()));
    }
  }
}

TEST_CASE("raising boundaries never lengthens a list") {
  auto m = fixtures::random_model(ModelKind::kMF, 4, 8, 50, 3);
  const auto cands = candidate_items(50);
  std::vector<std::size_t> before;
  for (UserId u = 0; u < 8; ++u) before.push_back(recommend_dynamic_k(m, u, cands).size());
  for (auto& t : m.boundaries) t += 0.3;
  for (UserId u = 0; u < 8; ++u) CHECK(recommend_dynamic_k(m, u, cands).size() <= before[u]);
}

TEST_CASE("output does not depend on candidate order") {
  const auto m = fixtures::random_model(ModelKind::kMF, 3, 1, 30, 8);
  auto cands = candidate_items(30);
  const auto reference = recommend_top_n(m, 0, cands, {}, 12).entries;
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10; ++k) {
    std::shuffle(cands.begin(), cands.end(), rng);
    CHECK(recommend_top_n(m, 0, cands, {}, 12).entries == reference);
  }
}

TEST_CASE("scores are non-increasing and above the boundary") {
  const auto m = fixtures::random_model(ModelKind::kMF, 5, 4, 60, 12);
  for (UserId u = 0; u < 4; ++u) {
    const auto list = recommend_dynamic_k(m, u, candidate_items(60));
    CHECK(list.size() <= kDefaultCap);
    for (std::size_t k = 0; k < list.size(); ++k) {
      CHECK(list.entries[k].score > m.boundaries[u]);
      if (k > 0) CHECK(list.entries[k].score <= list.entries[k - 1].score);
    }
  }
}
