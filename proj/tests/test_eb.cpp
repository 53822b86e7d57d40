#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dpmix/empirical_bayes.hpp"
#include "support/oracles.hpp"

using namespace dpmix;

namespace {
DataMatrix scaled_noise(Index n, Index d, double scale, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  RowMatrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = normal(eng);
  return DataMatrix(std::move(x));
}
}  // namespace

TEST_CASE("a0 derivative hand example") {
  RowMatrix x(2, 1);
  x << 1.0, -1.0;
  DataMatrix X{std::move(x)};
  Responsibilities q;
  q.q = RowMatrix::Constant(2, 1, 1.0);
  const double expect = 0.5 * (2.0 * trigamma(3.0) - 0.25);
  REQUIRE(vll_derivative_a0(X, q, 1.0) == Catch::Approx(expect).epsilon(1e-12));
  REQUIRE(expect == Catch::Approx(0.2699).margin(5e-4));
}

TEST_CASE("empty clusters contribute nothing to either derivative") {
  RowMatrix x(2, 1);
  x << 1.0, -1.0;
  DataMatrix X{std::move(x)};
  Responsibilities q1, q2;
  q1.q = RowMatrix::Constant(2, 1, 1.0);
  q2.q = RowMatrix::Zero(2, 3);
  q2.q.col(0).setOnes();
  REQUIRE(vll_derivative_a0(X, q2, 1.3) ==
          Catch::Approx(vll_derivative_a0(X, q1, 1.3)).epsilon(1e-13));
  REQUIRE(vll_derivative_k0(X, q2, 1.3) ==
          Catch::Approx(vll_derivative_k0(X, q1, 1.3)).epsilon(1e-13));
}

TEST_CASE("a0 derivative vanishes for large a0") {
  DataMatrix X = scaled_noise(20, 5, 2.0, 3);
  Responsibilities q = init_responsibilities(20, 4, 7);
  const double at_small = std::abs(vll_derivative_a0(X, q, 1e-3));
  REQUIRE(std::abs(vll_derivative_a0(X, q, 1e6)) < 1e-6 * at_small);
  REQUIRE_THROWS_AS(vll_derivative_a0(X, q, 0.0), DomainError);
}

TEST_CASE("k0 derivative hand example and monotone decay") {
  RowMatrix x(1, 1);
  x << 2.0;
  DataMatrix X{std::move(x)};
  Responsibilities q;
  q.q = RowMatrix::Constant(1, 1, 1.0);
  for (double k0 : {0.5, 1.0, 4.0})
    REQUIRE(vll_derivative_k0(X, q, k0) ==
            Catch::Approx(-3.0 / ((k0 + 1.0) * (k0 + 1.0))).epsilon(1e-13));
  REQUIRE(std::abs(vll_derivative_k0(X, q, 2.0)) <
          std::abs(vll_derivative_k0(X, q, 1.0)));
  REQUIRE_THROWS_AS(vll_derivative_k0(X, q, -1.0), DomainError);
}

TEST_CASE("derivatives match finite differences of the closed-form potential",
          "[oracle]") {
  DataMatrix X = scaled_noise(15, 6, 1.4, 17);
  std::mt19937_64 eng(29);
  for (int rep = 0; rep < 5; ++rep) {
    Responsibilities q = init_responsibilities(15, 3, eng());
    std::uniform_real_distribution<double> point(-2.0, 2.0);
    const double s = std::pow(10.0, point(eng));

    const double h = 1e-5 * s;
    const double fd_a0 = (oracle::vll_potential_a0(X, q, s + h) -
                          oracle::vll_potential_a0(X, q, s - h)) /
                         (2.0 * h);
    const double closed_a0 = vll_derivative_a0(X, q, s);
    REQUIRE(fd_a0 == Catch::Approx(closed_a0).epsilon(1e-4));

    const double fd_k0 = (oracle::vll_potential_k0(X, q, s + h) -
                          oracle::vll_potential_k0(X, q, s - h)) /
                         (2.0 * h);
    const double closed_k0 = vll_derivative_k0(X, q, s);
    REQUIRE(fd_k0 == Catch::Approx(closed_k0).epsilon(1e-4));
  }
}

TEST_CASE("estimate_a0 is deterministic and returns a sane profile") {
  DataMatrix X = scaled_noise(30, 8, 3.0, 5);
  const A0Estimate e1 = estimate_a0_detailed(X, 10, 99);
  const A0Estimate e2 = estimate_a0_detailed(X, 10, 99);
  REQUIRE(e1.a0 == e2.a0);
  REQUIRE(e1.profile.grid.size() == 60);
  REQUIRE(std::is_sorted(e1.profile.grid.begin(), e1.profile.grid.end()));
  for (double v : e1.profile.derivative) REQUIRE(std::isfinite(v));
  REQUIRE(e1.a0 > 0.0);
  REQUIRE_THROWS_AS(estimate_a0(X, 0, 1), DomainError);
}

TEST_CASE("root branch: returned point zeroes the median derivative") {
  // unstandardized large-scale data has a sign change in-grid
  DataMatrix X = scaled_noise(40, 10, 8.0, 23);
  const A0Estimate est = estimate_a0_detailed(X, 8, 4);
  // recompute the median derivative at the estimate
  std::vector<double> vals;
  for (int r = 0; r < 8; ++r) {
    Responsibilities q = init_responsibilities(40, 25, 4 + r);
    vals.push_back(vll_derivative_a0(X, q, est.a0));
  }
  const double at_root = std::abs(oracle::median(vals));
  std::vector<double> ends;
  for (int r = 0; r < 8; ++r) {
    Responsibilities q = init_responsibilities(40, 25, 4 + r);
    ends.push_back(vll_derivative_a0(X, q, 1e-3));
  }
  REQUIRE(at_root < 1e-6 * std::abs(oracle::median(ends)));
}

TEST_CASE("estimate grows when the data are scaled up") {
  DataMatrix X = scaled_noise(25, 6, 1.0, 31);
  RowMatrix doubled = 2.0 * X.x();
  DataMatrix X2{std::move(doubled)};
  REQUIRE(estimate_a0(X2, 10, 3) > estimate_a0(X, 10, 3));
}

TEST_CASE("choose_k0 is n plus one") {
  REQUIRE(choose_k0(72) == 73.0);
  REQUIRE(choose_k0(100) == 101.0);
  REQUIRE(choose_k0(1) == 2.0);
  REQUIRE_THROWS_AS(choose_k0(0), DomainError);
}
