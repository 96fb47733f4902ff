#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "dynak/errors.hpp"
#include "dynak/objectives.hpp"
#include "oracles.hpp"

using namespace dynak;

TEST_CASE("margin is y (s - t_u)") {
  CHECK(margin(+1, 2.0, 1.5) == 0.5);
  CHECK(margin(-1, 2.0, 1.5) == -0.5);
  CHECK(margin(+1, 0.7, 0.7) == 0.0);
  CHECK_THROWS_AS(margin(0, 1.0, 1.0), ContractError);
  CHECK_THROWS_AS(margin(2, 1.0, 1.0), ContractError);
}

TEST_CASE("margin is negative exactly on misclassified examples") {
  const double grid[] = {-1.0, 0.0, 0.5, 1.0, 2.0};
  for (int y : {-1, 1}) {
    for (double s : grid) {
      for (double t : grid) {
        const bool wrong = (s > t && y == -1) || (s < t && y == 1);
        CHECK((margin(y, s, t) < 0.0) == wrong);
      }
    }
  }
}

TEST_CASE("logistic_loss values") {
  CHECK(logistic_loss(0.0) == doctest::Approx(0.6931472).epsilon(1e-7));
  CHECK(logistic_loss(-1.0) == doctest::Approx(1.3132617).epsilon(1e-7));
  const double far = logistic_loss(1000.0);
  CHECK(std::isfinite(far));
  CHECK(far >= 0.0);
  CHECK(far < 1e-300);
  CHECK(logistic_loss(-1000.0) == doctest::Approx(1000.0));
}

TEST_CASE("logistic_loss is positive and strictly decreasing") {
  double previous = std::numeric_limits<double>::infinity();
  for (double m = -30.0; m <= 30.0; m += 0.25) {
    const double v = logistic_loss(m);
    CHECK(v > 0.0);
    CHECK(v < previous);
    previous = v;
  }
}

TEST_CASE("logistic_loss is convex around zero") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int k = 0; k < 200; ++k) {
    const double m = u(rng);
    CHECK(logistic_loss(m) + logistic_loss(-m) >= 2.0 * std::log(2.0));
  }
  CHECK(logistic_loss(0.0) + logistic_loss(-0.0) == doctest::Approx(2.0 * std::log(2.0)));
}

TEST_CASE("logistic_loss_grad is -sigmoid(-m) and matches finite differences") {
  for (double m : {-5.0, -1.0, 0.0, 1.0, 5.0}) {
    CHECK(logistic_loss_grad(m) == doctest::Approx(-sigmoid(-m)).epsilon(1e-15));
    const double h = 1e-6;
    const double fd = (logistic_loss(m + h) - logistic_loss(m - h)) / (2.0 * h);
    CHECK(oracle::relative_error(logistic_loss_grad(m), fd) <= 1e-5);
  }
}

TEST_CASE("sigmoid and softplus stay finite at the extremes") {
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
}

TEST_CASE("hinge_loss values and gradient") {
  CHECK(hinge_loss(1.0) == 0.0);
  CHECK(hinge_loss(0.0) == 1.0);
  CHECK(hinge_loss(-0.5) == 1.5);
  CHECK(hinge_loss(3.0) == 0.0);
  CHECK(hinge_loss_grad(0.5) == -1.0);
  CHECK(hinge_loss_grad(2.0) == 0.0);
  CHECK(classification_loss(ClassificationLoss::kHinge, -0.5) == 1.5);
  CHECK(classification_loss(ClassificationLoss::kLogistic, 0.0) == doctest::Approx(std::log(2.0)));
  CHECK(parse_classification_loss("hinge") == ClassificationLoss::kHinge);
  CHECK(to_string(ClassificationLoss::kLogistic) == "logistic");
  CHECK_THROWS_AS(parse_classification_loss("squared"), ConfigError);
}

TEST_CASE("boundary_penalty values") {
  CHECK(boundary_penalty(2.0, 2.0, 1.0) == 0.0);
  CHECK(boundary_penalty(3.0, 2.0, 1.0) == 1.0);
  CHECK(boundary_penalty(3.0, 2.0, 0.5) == 0.5);
  CHECK(boundary_penalty_grad(3.0, 2.0, 1.0) == 2.0);
}

TEST_CASE("boundary_penalty_grad matches finite differences") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    const double t_u = u(rng);
    const double t = u(rng);
    const double lambda = std::abs(u(rng));
    const double h = 1e-6;
    const double fd =
        (boundary_penalty(t_u + h, t, lambda) - boundary_penalty(t_u - h, t, lambda)) / (2.0 * h);
    CHECK(oracle::relative_error(boundary_penalty_grad(t_u, t, lambda), fd) <= 1e-6);
  }
}

TEST_CASE("bpr_pair_loss values") {
  CHECK(bpr_pair_loss(0.3, 0.3) == doctest::Approx(0.6931472).epsilon(1e-7));
  CHECK(bpr_pair_loss(0.0, 2.0) == doctest::Approx(2.1269280).epsilon(1e-7));
  CHECK(bpr_pair_loss(1e6, 0.0) == doctest::Approx(0.0));
  CHECK(std::isfinite(bpr_pair_loss(-1e6, 0.0)));
}

TEST_CASE("bpr_pair_loss is translation invariant and decreasing in the gap") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int k = 0; k < 100; ++k) {
    const double a = u(rng);
    const double b = u(rng);
    const double c = u(rng);
    CHECK(std::abs(bpr_pair_loss(a + c, b + c) - bpr_pair_loss(a, b)) <= 1e-12);
    CHECK(bpr_pair_loss(a + 0.1, b) < bpr_pair_loss(a, b));
  }
}

TEST_CASE("bpr_pair_loss_grad is -sigmoid(-delta)") {
  for (double d : {-4.0, -0.5, 0.0, 0.5, 4.0}) {
    CHECK(bpr_pair_loss_grad(d, 0.0) == doctest::Approx(-sigmoid(-d)).epsilon(1e-15));
    const double h = 1e-6;
    const double fd = (bpr_pair_loss(d + h, 0.0) - bpr_pair_loss(d - h, 0.0)) / (2.0 * h);
    CHECK(oracle::relative_error(bpr_pair_loss_grad(d, 0.0), fd) <= 1e-5);
  }
}

TEST_CASE("hybrid_weighting splits alpha") {
  CHECK(hybrid_weighting(0.0).classification == 0.0);
  CHECK(hybrid_weighting(0.0).ranking == 1.0);
  CHECK(hybrid_weighting(1.0).classification == 1.0);
  CHECK(hybrid_weighting(1.0).ranking == 0.0);
  CHECK(hybrid_weighting(0.5).classification == 0.5);
  CHECK(hybrid_weighting(0.5).ranking == 0.5);
  CHECK_THROWS_AS(hybrid_weighting(-0.1), ContractError);
  CHECK_THROWS_AS(hybrid_weighting(1.1), ContractError);
}
