#include <catch2/catch_amalgamated.hpp>

#include "dpmix/config.hpp"
#include "dpmix/model.hpp"

using namespace dpmix;

TEST_CASE("defaults adapt to data size") {
  Hyperparams h = default_hyperparams(CovarianceModel::M7_ClusterLaplace, 100, 1000);
  REQUIRE(h.k0 == 101.0);
  REQUIRE(h.a0 == 0.001);
  REQUIRE(h.b0 == 0.001);
  REQUIRE(h.truncation == 25);
  REQUIRE(h.restarts == 10);
  REQUIRE(h.max_iter == 500);
  REQUIRE(h.rel_tol == 1e-6);

  Hyperparams h6 = default_hyperparams(CovarianceModel::M6_ClusterIW, 10, 3);
  REQUIRE(h6.nu0 == 5.0);
  REQUIRE(h6.V0.is_scalar());
  REQUIRE(h6.V0.scale == 1.0);
  REQUIRE(h6.truncation == 10);

  REQUIRE(default_hyperparams(CovarianceModel::M7_ClusterLaplace, 72, 2194).k0 == 73.0);
}

TEST_CASE("defaults reject degenerate sizes") {
  REQUIRE_THROWS_AS(default_hyperparams(CovarianceModel::M7_ClusterLaplace, 1, 5),
                    ValidationError);
}

TEST_CASE("validate names the violated invariant") {
  const int d = 4;
  Hyperparams h = default_hyperparams(CovarianceModel::M6_ClusterIW, 10, d);
  h.nu0 = d - 1.0;
  try {
    validate(h, CovarianceModel::M6_ClusterIW, d);
    FAIL("expected IWDegreesTooSmall");
  } catch (const ValidationError& e) {
    REQUIRE(e.code() == "IWDegreesTooSmall");
  }

  Hyperparams h7 = default_hyperparams(CovarianceModel::M7_ClusterLaplace, 10, d);
  h7.c0 = 0.0;
  try {
    validate(h7, CovarianceModel::M7_ClusterLaplace, d);
    FAIL("expected NonPositiveRate");
  } catch (const ValidationError& e) {
    REQUIRE(e.code() == "NonPositiveRate");
  }
}

TEST_CASE("defaults validate for every model and size", "[property]") {
  for (int m = 0; m < 8; ++m) {
    const auto model = static_cast<CovarianceModel>(m);
    for (auto [n, d] : {std::pair{2, 1}, {5, 3}, {100, 10}}) {
      Hyperparams h = default_hyperparams(model, n, d);
      REQUIRE_NOTHROW(validate(h, model, d));
    }
  }
}

TEST_CASE("config json round-trip is the identity") {
  Hyperparams h = default_hyperparams(CovarianceModel::M6_ClusterIW, 30, 3);
  h.a = 2.5;
  h.k0 = 7.0;
  h.seed = 99;
  h.alpha_stabilizer = AlphaStabilizer::One;
  Matrix v0(3, 3);
  v0 << 2, 0.1, 0, 0.1, 2, 0.1, 0, 0.1, 2;
  h.V0.dense = v0;

  const nlohmann::json j = hyperparams_to_json(h);
  const Hyperparams back = hyperparams_from_json(j);
  REQUIRE(back.a == h.a);
  REQUIRE(back.b == h.b);
  REQUIRE(back.truncation == h.truncation);
  REQUIRE(back.k0 == h.k0);
  REQUIRE(back.nu0 == h.nu0);
  REQUIRE(back.seed == h.seed);
  REQUIRE(back.alpha_stabilizer == AlphaStabilizer::One);
  REQUIRE(back.V0.dense.has_value());
  REQUIRE((*back.V0.dense - v0).norm() == 0.0);
  REQUIRE(hyperparams_to_json(back) == j);
}

TEST_CASE("config rejects unknown keys, accepts scalar shorthand") {
  nlohmann::json j;
  j["a"] = 1.0;
  j["V0"] = 2.5;
  Hyperparams h = hyperparams_from_json(j);
  REQUIRE(h.V0.is_scalar());
  REQUIRE(h.V0.scale == 2.5);
  REQUIRE(h.V0.materialize(2).isApprox(2.5 * Matrix::Identity(2, 2)));

  j["frobnicate"] = 1;
  REQUIRE_THROWS_AS(hyperparams_from_json(j), ParseError);
}

TEST_CASE("model tags parse back and forth") {
  for (int m = 0; m < 8; ++m) {
    const auto model = static_cast<CovarianceModel>(m);
    REQUIRE(parse_model(model_name(model)) == model);
  }
  REQUIRE_THROWS_AS(parse_model("m9"), ValidationError);
}
