#include <doctest.h>

#include <random>

#include "drne/ambiguity.hpp"

using namespace drne;

namespace {

DiscreteDistribution random_distribution(std::mt19937_64& rng, int atoms, int dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DiscreteDistribution d;
  d.weights.resize(atoms);
  for (int k = 0; k < atoms; ++k) {
    Vec p(dim);
    for (int j = 0; j < dim; ++j) p[j] = u(rng);
    d.points.push_back(p);
    d.weights[k] = 0.05 + u(rng);
  }
  d.weights /= d.weights.sum();
  return d;
}

}  // namespace

TEST_CASE("empirical distribution is uniform on the samples") {
  const std::vector<Vec> s{Vec::Constant(1, 1.0), Vec::Constant(1, 2.0), Vec::Constant(1, 1.0)};
  const auto P = empirical_distribution(s);
  CHECK(P.size() == 3);
  CHECK(P.weights.sum() == doctest::Approx(1.0));
  const auto M = P.merged();
  REQUIRE(M.size() == 2);
  CHECK(M.points[0][0] == 1.0);
  CHECK(M.weights[0] == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(empirical_distribution({}), Error);
}

TEST_CASE("distribution validation") {
  DiscreteDistribution d;
  d.points = {Vec::Zero(1), Vec::Ones(1)};
  d.weights = (Vec(2) << 0.5, 0.6).finished();
  CHECK_THROWS_AS(d.validate(), Error);
  d.weights = (Vec(2) << 1.2, -0.2).finished();
  CHECK_THROWS_AS(d.validate(), Error);
  d.weights = (Vec(2) << 0.5, 0.5).finished();
  CHECK_NOTHROW(d.validate());
  d.points[1] = Vec::Ones(2);
  CHECK_THROWS_AS(d.validate(), Error);
}

TEST_CASE("transport distance: exact solver against the dense LP") {
  std::mt19937_64 rng(3);
  for (Norm n : {Norm::kL1, Norm::kL2, Norm::kLinf}) {
    for (int trial = 0; trial < 6; ++trial) {
      const auto P = random_distribution(rng, 3 + trial, 2);
      const auto Q = random_distribution(rng, 4 + trial % 3, 2);
      CHECK(wasserstein_discrete(P, Q, n) == doctest::Approx(wasserstein_discrete_lp(P, Q, n)).epsilon(1e-9));
    }
  }
}

TEST_CASE("one-dimensional distance: quantile coupling against the LP") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto P = random_distribution(rng, 2 + trial, 1);
    const auto Q = random_distribution(rng, 3 + trial % 4, 1);
    CHECK(wasserstein_1d(P, Q) == doctest::Approx(wasserstein_discrete_lp(P, Q)).epsilon(1e-9));
  }
}

TEST_CASE("transport distance is a metric on random triples") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto P = random_distribution(rng, 4, 2);
    const auto Q = random_distribution(rng, 5, 2);
    const auto R = random_distribution(rng, 3, 2);
    CHECK(wasserstein_discrete(P, P) == doctest::Approx(0.0));
    CHECK(wasserstein_discrete(P, Q) == doctest::Approx(wasserstein_discrete(Q, P)).epsilon(1e-9));
    CHECK(wasserstein_discrete(P, R) <= wasserstein_discrete(P, Q) + wasserstein_discrete(Q, R) + 1e-9);
  }
}

TEST_CASE("shifting every atom moves the distributions by the shift length") {
  std::mt19937_64 rng(8);
  const auto P = random_distribution(rng, 6, 2);
  auto Q = P;
  const Vec shift = (Vec(2) << 0.3, -0.4).finished();
  for (auto& p : Q.points) p += shift;
  CHECK(wasserstein_discrete(P, Q, Norm::kL2) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(wasserstein_discrete(P, Q, Norm::kL1) == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("confidence from radius on both branches") {
  const CalibrationConstants c;  // a = 2, c = 3, b = 1, p = 1
  const auto small = confidence_from_radius(10, 0.5, c);
  CHECK(small.beta == doctest::Approx(3.0 * std::exp(-10.0 * 0.25)));
  CHECK_FALSE(small.vacuous);
  const auto large = confidence_from_radius(2, 1.5, c);
  CHECK(large.beta == doctest::Approx(3.0 * std::exp(-2.0 * 2.25)));
  CHECK(confidence_from_radius(1, 0.1, c).vacuous);
}

TEST_CASE("calibration round trip and the branch tie") {
  CalibrationConstants c;
  c.a = 1.5;
  c.p = 3;
  for (int K : {1, 5, 20, 100, 1000})
    for (double beta : {0.001, 0.01, 0.05, 0.2, 0.5}) {
      const double eps = radius_from_confidence(K, beta, c);
      CHECK(confidence_from_radius(K, eps, c).beta == doctest::Approx(beta).epsilon(1e-10));
    }
  // K = ln(c / beta) / b puts the radius exactly at 1 on both branches.
  const double beta = 3.0 * std::exp(-4.0);
  CHECK(radius_from_confidence(4, beta, CalibrationConstants{}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("radius shrinks with more samples and grows with confidence") {
  const CalibrationConstants c;
  CHECK(radius_from_confidence(50, 0.05, c) < radius_from_confidence(10, 0.05, c));
  CHECK(radius_from_confidence(10, 0.01, c) > radius_from_confidence(10, 0.05, c));
  CHECK_THROWS_AS(radius_from_confidence(10, 0.0, c), Error);
  CHECK_THROWS_AS(radius_from_confidence(0, 0.05, c), Error);
}

TEST_CASE("sensitivity bound") {
  CHECK(sensitivity_bound({{(Vec(2) << 1.0, 2.0).finished(), 0.1, 0.2}}) == doctest::Approx(0.45));
  CHECK(sensitivity_bound({{Vec::Ones(1), 0.0, 0.0}, {Vec::Ones(1), 0.5, 0.0}}) == doctest::Approx(0.25));
}
