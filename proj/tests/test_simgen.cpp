#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "dpmix/engine.hpp"
#include "dpmix/metrics.hpp"
#include "dpmix/simulate.hpp"
#include "support/oracles.hpp"

using namespace dpmix;

TEST_CASE("gaussian simulation honors the shape and label contract") {
  SimSpec spec;
  spec.n = 100;
  spec.d = 2;
  spec.k_true = 2;
  spec.separation = 10.0;
  spec.seed = 5;
  LabeledData ld = simulate(spec);
  REQUIRE(ld.x.n() == 100);
  REQUIRE(ld.x.d() == 2);
  std::set<int> seen(ld.labels.begin(), ld.labels.end());
  REQUIRE(seen == std::set<int>{1, 2});
  REQUIRE(ld.x.has_labels());

  LabeledData again = simulate(spec);
  REQUIRE(ld.x.x() == again.x.x());
  REQUIRE(ld.labels == again.labels);
}

TEST_CASE("every requested label appears at least once") {
  SimSpec spec;
  spec.n = 12;
  spec.d = 2;
  spec.k_true = 10;
  spec.seed = 9;
  for (int s = 0; s < 20; ++s) {
    spec.seed = s;
    LabeledData ld = simulate(spec);
    std::set<int> seen(ld.labels.begin(), ld.labels.end());
    REQUIRE(seen.size() == 10);
  }
}

TEST_CASE("negative binomial output is standardized feature-wise") {
  SimSpec spec;
  spec.n = 100;
  spec.d = 1000;
  spec.k_true = 3;
  spec.family = SimFamily::NegativeBinomial;
  spec.seed = 44;
  LabeledData ld = simulate(spec);
  REQUIRE(ld.x.n() == 100);
  REQUIRE(ld.x.d() == 1000);
  for (Index j = 0; j < 50; ++j) {  // spot check
    REQUIRE(ld.x.x().col(j).mean() == Catch::Approx(0.0).margin(1e-9));
    const double sd = std::sqrt(ld.x.x().col(j).squaredNorm() / 100.0);
    REQUIRE((sd == Catch::Approx(1.0).margin(1e-9) || sd == 0.0));
  }
}

TEST_CASE("ari examples") {
  REQUIRE(ari({1, 1, 2, 2}, {1, 1, 2, 2}) == 1.0);
  REQUIRE(ari({1, 1, 2, 2}, {1, 2, 1, 2}) == Catch::Approx(-0.5).epsilon(1e-14));
  REQUIRE(ari({1, 1, 2, 2}, {7, 7, 3, 3}) == 1.0);
  REQUIRE_THROWS_AS(ari({1, 2}, {1, 2, 3}), Error);
}

TEST_CASE("ari matches the pairwise oracle and is relabel-invariant", "[property]") {
  std::mt19937_64 eng(61);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 2 + static_cast<int>(eng() % 49);
    std::vector<int> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = static_cast<int>(eng() % 5);
      b[i] = static_cast<int>(eng() % 4);
    }
    const double v = ari(a, b);
    REQUIRE(v == Catch::Approx(oracle::pairwise_ari(a, b)).margin(1e-12));
    REQUIRE(v == Catch::Approx(ari(b, a)).margin(1e-14));
    std::vector<int> a2(n);
    for (int i = 0; i < n; ++i) a2[i] = 1000 - 7 * a[i];
    REQUIRE(ari(a2, b) == Catch::Approx(v).margin(1e-14));
    REQUIRE(v >= -1.0);
    REQUIRE(v <= 1.0 + 1e-15);
  }
}

TEST_CASE("k_post counts distinct labels") {
  REQUIRE(k_post({4, 4, 4}) == 1);
  REQUIRE(k_post({1, 3, 3, 7}) == 3);
  REQUIRE_THROWS_AS(k_post({}), DomainError);
}

TEST_CASE("zero separation collapses to a single cluster", "[slow]") {
  int singles = 0;
  for (int s = 0; s < 10; ++s) {
    SimSpec spec;
    spec.n = 40;
    spec.d = 2;
    spec.k_true = 2;
    spec.separation = 0.0;
    spec.seed = 100 + s;
    LabeledData ld = simulate(spec);
    Hyperparams h = default_hyperparams(CovarianceModel::M7_ClusterLaplace, 40, 2);
    h.restarts = 2;
    h.max_iter = 60;
    h.seed = s;
    FitResult r = fit(ld.x, CovarianceModel::M7_ClusterLaplace, h);
    if (r.k_post == 1) ++singles;
  }
  REQUIRE(singles >= 8);
}
