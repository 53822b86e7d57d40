#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dpmix/engine.hpp"
#include "dpmix/params.hpp"

using namespace dpmix;

namespace {
DataMatrix random_data(Index n, Index d, std::uint64_t seed, double spread = 1.0) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> normal(0.0, spread);
  RowMatrix x(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x(i, j) = normal(eng);
  return DataMatrix(std::move(x));
}
}  // namespace

TEST_CASE("expected log density: fixed identity covariance at the mean") {
  const Index d = 3;
  Hyperparams h;
  ClusterParams P = init_cluster_params(CovarianceModel::M2_FixedFull, h, d, 2);
  Vector x(d);
  x << 0.3, -1.2, 2.0;
  P.phi.row(0) = x.transpose();
  P.lambda_full[0].setZero();
  P.tr_prec_lambda(0) = 0.0;
  REQUIRE(expected_log_density(x, 0, P) ==
          Catch::Approx(-0.5 * d * kLogTwoPi).epsilon(1e-13));
}

TEST_CASE("expected log density: inverse-Wishart cluster, d = 1") {
  Hyperparams h;
  h.nu0 = 3.0;
  h.k0 = 1.0;
  ClusterParams P = init_cluster_params(CovarianceModel::M6_ClusterIW, h, 1, 2);
  P.nu(0) = 3.0;
  P.V[0] = Matrix::Constant(1, 1, 2.0);
  P.Vinv[0] = Matrix::Constant(1, 1, 0.5);
  P.logdetV(0) = std::log(2.0);
  P.phi.row(0).setZero();
  P.lambda_full[0].setZero();
  P.eld(0) = digamma(1.5) + std::log(2.0) - std::log(2.0);
  P.tr_prec_lambda(0) = 0.0;
  Vector x(1);
  x << 1.0;
  const double expect = -0.5 * kLogTwoPi + 0.5 * digamma(1.5) - 0.75;
  REQUIRE(expected_log_density(x, 0, P) == Catch::Approx(expect).epsilon(1e-13));
}

TEST_CASE("expected log density: diagonal-only expectation for M7") {
  Hyperparams h;
  h.a0 = h.b0 = 1.0;
  h.k0 = 1.0;
  ClusterParams P = init_cluster_params(CovarianceModel::M7_ClusterLaplace, h, 2, 2);
  P.gam_a(0) = 1.0;
  P.gam_b.row(0).setConstant(1.0);
  P.phi.row(0).setZero();
  P.lambda_diag.row(0).setZero();
  P.eld(0) = 2.0 * digamma(1.0);
  P.tr_prec_lambda(0) = 0.0;
  Vector x(2);
  x << 1.0, 1.0;
  const double expect = -kLogTwoPi + digamma(1.0) - 1.0;
  REQUIRE(expected_log_density(x, 0, P) == Catch::Approx(expect).epsilon(1e-13));
}

TEST_CASE("expected log density rejects bad cluster index") {
  Hyperparams h;
  ClusterParams P = init_cluster_params(CovarianceModel::M2_FixedFull, h, 2, 2);
  Vector x(2);
  x.setZero();
  REQUIRE_THROWS_AS(expected_log_density(x, 5, P), IndexOutOfRange);
}

TEST_CASE("M6 update on a single observation") {
  const Index d = 2;
  Hyperparams h = default_hyperparams(CovarianceModel::M6_ClusterIW, 2, d);
  h.k0 = 1.0;
  DataMatrix X = random_data(1, d, 5, 2.0);
  Responsibilities q;
  q.q.resize(1, 2);
  q.q << 1.0, 0.0;
  Workspace ws;
  ws.bind(X, CovarianceModel::M6_ClusterIW);
  ClusterParams P = init_cluster_params(CovarianceModel::M6_ClusterIW, h, d, 2);
  update_mu_sigma(X, q, h, ws, P);

  const Vector x = X.row(0).transpose();
  REQUIRE(P.nu(0) == h.nu0 + 2.0);
  const Matrix expectV = h.V0.materialize(d) + x * x.transpose();
  REQUIRE((P.V[0] - expectV).norm() <= 1e-13 * expectV.norm());
  REQUIRE((P.phi.row(0).transpose() - x / 2.0).norm() <= 1e-13);
}

TEST_CASE("M7 empty cluster relaxes to the prior fixed point") {
  const Index d = 3;
  Hyperparams h = default_hyperparams(CovarianceModel::M7_ClusterLaplace, 2, d);
  h.a0 = h.b0 = 0.25;
  h.c0 = 2.0;
  DataMatrix X = random_data(2, d, 6);
  Responsibilities q;
  q.q.resize(2, 2);
  q.q << 1.0, 0.0, 1.0, 0.0;
  Workspace ws;
  ws.bind(X, CovarianceModel::M7_ClusterLaplace);
  ClusterParams P = init_cluster_params(CovarianceModel::M7_ClusterLaplace, h, d, 2);
  update_mu_sigma(X, q, h, ws, P);

  REQUIRE(P.gam_a(1) == h.a0 + 1.0);
  REQUIRE(P.gam_b.row(1).minCoeff() == h.b0);
  REQUIRE(P.gam_b.row(1).maxCoeff() == h.b0);
  REQUIRE(P.offdiag[1](2, 1) == h.c0);
  REQUIRE(P.phi.row(1).norm() == 0.0);
}

TEST_CASE("M7 update hand example") {
  Hyperparams h = default_hyperparams(CovarianceModel::M7_ClusterLaplace, 2, 2);
  h.a0 = h.b0 = h.c0 = 1.0;
  RowMatrix x(1, 2);
  x << 2.0, 1.0;
  DataMatrix X{std::move(x)};
  Responsibilities q;
  q.q.resize(1, 2);
  q.q << 1.0, 0.0;
  Workspace ws;
  ws.bind(X, CovarianceModel::M7_ClusterLaplace);
  ClusterParams P = init_cluster_params(CovarianceModel::M7_ClusterLaplace, h, 2, 2);
  update_mu_sigma(X, q, h, ws, P);

  REQUIRE(P.gam_a(0) == 3.0);
  REQUIRE(P.gam_b(0, 0) == 3.0);
  REQUIRE(P.gam_b(0, 1) == 1.5);
  REQUIRE(P.offdiag[0](1, 0) == Catch::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("M8 off-diagonal means follow the linear update") {
  Hyperparams h = default_hyperparams(CovarianceModel::M8_ClusterNormal, 2, 2);
  h.c0 = 1.0;
  RowMatrix x(1, 2);
  x << 2.0, 1.0;
  DataMatrix X{std::move(x)};
  Responsibilities q;
  q.q.resize(1, 2);
  q.q << 1.0, 0.0;
  Workspace ws;
  ws.bind(X, CovarianceModel::M8_ClusterNormal);
  ClusterParams P = init_cluster_params(CovarianceModel::M8_ClusterNormal, h, 2, 2);
  update_mu_sigma(X, q, h, ws, P);
  // c = c0 - (1e-6 / 2) * (2 * 1)
  REQUIRE(P.offdiag[0](1, 0) == Catch::Approx(1.0 - 1e-6).epsilon(1e-14));
}

TEST_CASE("single-cluster updates equal the conjugate NIW posterior", "[oracle]") {
  std::mt19937_64 eng(23);
  for (int rep = 0; rep < 5; ++rep) {
    const Index n = 3 + static_cast<Index>(eng() % 20);
    const Index d = 1 + static_cast<Index>(eng() % 4);
    Hyperparams h = default_hyperparams(CovarianceModel::M6_ClusterIW, static_cast<int>(n),
                                        static_cast<int>(d));
    h.k0 = 2.5;
    DataMatrix X = random_data(n, d, eng(), 1.5);
    Responsibilities q;
    q.q.resize(n, 2);
    q.q.col(0).setOnes();
    q.q.col(1).setZero();
    Workspace ws;
    ws.bind(X, CovarianceModel::M6_ClusterIW);
    ClusterParams P = init_cluster_params(CovarianceModel::M6_ClusterIW, h, d, 2);
    update_mu_sigma(X, q, h, ws, P);

    Matrix scatter = Matrix::Zero(d, d);
    Vector sum = Vector::Zero(d);
    for (Index i = 0; i < n; ++i) {
      const Vector x = X.row(i).transpose();
      scatter += x * x.transpose();
      sum += x;
    }
    REQUIRE(P.nu(0) == h.nu0 + 1.0 + n);
    const Matrix expectV = h.V0.materialize(d) + scatter;
    REQUIRE((P.V[0] - expectV).norm() <= 1e-13 * (1.0 + expectV.norm()));
    const Vector expect_phi = sum / (h.k0 + n);
    REQUIRE((P.phi.row(0).transpose() - expect_phi).norm() <=
            1e-13 * (1.0 + expect_phi.norm()));
  }
}

TEST_CASE("cluster permutation moves every block") {
  const Index d = 2, K = 3;
  Hyperparams h = default_hyperparams(CovarianceModel::M7_ClusterLaplace, 5, d);
  DataMatrix X = random_data(5, d, 31);
  Responsibilities q = init_responsibilities(5, K, 3);
  Workspace ws;
  ws.bind(X, CovarianceModel::M7_ClusterLaplace);
  ClusterParams P = init_cluster_params(CovarianceModel::M7_ClusterLaplace, h, d, K);
  update_mu_sigma(X, q, h, ws, P);
  ClusterParams before = P;
  P.permute({2, 0, 1});
  for (Index k = 0; k < K; ++k) {
    const Index src = std::vector<Index>{2, 0, 1}[k];
    REQUIRE(P.phi.row(k) == before.phi.row(src));
    REQUIRE(P.gam_a(k) == before.gam_a(src));
    REQUIRE(P.eld(k) == before.eld(src));
  }
}
