#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>

#include "dpmix/linalg.hpp"

namespace dpmix {

// Table of covariance parameterizations. M1/M2 carry a fixed covariance,
// M3-M5 a shared unknown covariance, M6-M8 cluster-specific ones.
enum class CovarianceModel {
  M1_FixedDiag,
  M2_FixedFull,
  M3_GlobalDiag,
  M4_GlobalIW,
  M5_GlobalCholesky,
  M6_ClusterIW,
  M7_ClusterLaplace,
  M8_ClusterNormal,
};

inline bool is_cluster_specific(CovarianceModel m) {
  return m == CovarianceModel::M6_ClusterIW ||
         m == CovarianceModel::M7_ClusterLaplace ||
         m == CovarianceModel::M8_ClusterNormal;
}

inline bool is_elementwise(CovarianceModel m) {
  return m == CovarianceModel::M7_ClusterLaplace ||
         m == CovarianceModel::M8_ClusterNormal;
}

inline const char* model_name(CovarianceModel m) {
  switch (m) {
    case CovarianceModel::M1_FixedDiag: return "m1";
    case CovarianceModel::M2_FixedFull: return "m2";
    case CovarianceModel::M3_GlobalDiag: return "m3";
    case CovarianceModel::M4_GlobalIW: return "m4";
    case CovarianceModel::M5_GlobalCholesky: return "m5";
    case CovarianceModel::M6_ClusterIW: return "m6";
    case CovarianceModel::M7_ClusterLaplace: return "m7";
    case CovarianceModel::M8_ClusterNormal: return "m8";
  }
  return "?";
}

inline CovarianceModel parse_model(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  for (int i = 0; i < 8; ++i) {
    auto m = static_cast<CovarianceModel>(i);
    if (t == model_name(m)) return m;
  }
  throw ValidationError("UnknownModel", "expected m1..m8, got '" + s + "'");
}

// Matrix-valued hyperparameter with scalar shorthand: a bare scale c means
// c * identity at whatever dimension the data has.
struct MatParam {
  double scale = 1.0;
  std::optional<Matrix> dense;

  static MatParam scaled_identity(double c) { return MatParam{c, std::nullopt}; }
  bool is_scalar() const { return !dense.has_value(); }
  Matrix materialize(Index d) const {
    if (dense) return *dense;
    return scale * Matrix::Identity(d, d);
  }
};

enum class AlphaStabilizer { PrevMean, One };

// All fixed hyperparameters for one fit. Defaults are the weakly-informative
// choices; default_hyperparams() adapts the data-dependent ones.
struct Hyperparams {
  double a = 1.0;            // alpha ~ Gamma(a, b)
  double b = 1.0;
  int truncation = 25;       // K
  MatParam sigma_mu = MatParam::scaled_identity(1.0);  // prior cov of mu_k (global models)
  double k0 = 1.0;           // prior scaling (cluster-specific models)
  double fixed_sigma = 1.0;  // M1: covariance (1/sigma) I, sigma a precision scalar
  MatParam fixed_Sigma = MatParam::scaled_identity(1.0);  // M2
  double g1 = 1e-3, g2 = 1e-3;                           // M3: sigma ~ Gamma(g1, g2)
  double nu0 = 0.0;                                      // M4/M6 IW degrees
  MatParam V0 = MatParam::scaled_identity(1.0);          // M4/M6 IW scale
  double mu0_L = 0.0, sigma0_L = 1.0;  // M5 off-diagonal prior (mean, variance)
  double a0_L = 1e-3, b0_L = 1e-3;     // M5 diagonal Gamma prior
  double a0 = 1e-3, b0 = 1e-3;         // M7/M8 diagonal Gamma prior
  double c0 = 1.0;                     // M7 Laplace scale / M8 Gaussian mean
  int restarts = 10;
  int max_iter = 500;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;
  AlphaStabilizer alpha_stabilizer = AlphaStabilizer::PrevMean;
};

inline Hyperparams default_hyperparams(CovarianceModel model, int n, int d) {
  if (n < 2) throw ValidationError("InvalidDimension", "need n >= 2");
  if (d < 1) throw ValidationError("InvalidDimension", "need d >= 1");
  Hyperparams h;
  h.a = 1.0;
  h.b = 1.0;
  h.truncation = std::min(n, 25);
  h.k0 = n + 1.0;
  h.a0 = h.b0 = 1e-3;
  h.c0 = 1.0;
  h.nu0 = d + 2.0;
  h.V0 = MatParam::scaled_identity(1.0);
  h.sigma_mu = MatParam::scaled_identity(1.0);
  h.restarts = 10;
  h.max_iter = 500;
  h.rel_tol = 1e-6;
  (void)model;
  return h;
}

namespace detail {
inline void require_positive(double v, const char* what) {
  if (!(v > 0.0))
    throw ValidationError("NonPositiveRate", std::string(what) + " must be > 0");
}
inline void require_pd(const MatParam& p, Index d, const char* what) {
  if (p.is_scalar()) {
    require_positive(p.scale, what);
    return;
  }
  if (p.dense->rows() != d || p.dense->cols() != d)
    throw ValidationError("DimensionMismatch",
                          std::string(what) + " must be " + std::to_string(d) + "x" +
                              std::to_string(d));
  try {
    cholesky(SymMatrix(*p.dense));
  } catch (const NotPositiveDefinite&) {
    throw ValidationError("NotPositiveDefinite",
                          std::string(what) + " is not positive definite");
  }
}
}  // namespace detail

inline void validate(const Hyperparams& h, CovarianceModel model, int d) {
  detail::require_positive(h.a, "a");
  detail::require_positive(h.b, "b");
  if (h.truncation < 2)
    throw ValidationError("TruncationTooSmall", "K must be >= 2");
  if (h.restarts < 1)
    throw ValidationError("NonPositiveRestarts", "restarts must be >= 1");
  if (h.max_iter < 1)
    throw ValidationError("NonPositiveIterations", "max_iter must be >= 1");
  detail::require_positive(h.rel_tol, "rel_tol");

  switch (model) {
    case CovarianceModel::M1_FixedDiag:
      detail::require_positive(h.fixed_sigma, "sigma");
      detail::require_pd(h.sigma_mu, d, "Sigma_mu");
      break;
    case CovarianceModel::M2_FixedFull:
      detail::require_pd(h.fixed_Sigma, d, "Sigma");
      detail::require_pd(h.sigma_mu, d, "Sigma_mu");
      break;
    case CovarianceModel::M3_GlobalDiag:
      detail::require_positive(h.g1, "g1");
      detail::require_positive(h.g2, "g2");
      detail::require_pd(h.sigma_mu, d, "Sigma_mu");
      break;
    case CovarianceModel::M4_GlobalIW:
      if (!(h.nu0 > d - 1.0))
        throw ValidationError("IWDegreesTooSmall", "need nu0 > d - 1");
      detail::require_pd(h.V0, d, "V0");
      detail::require_pd(h.sigma_mu, d, "Sigma_mu");
      break;
    case CovarianceModel::M5_GlobalCholesky:
      detail::require_positive(h.sigma0_L, "sigma0_L");
      detail::require_positive(h.a0_L, "a0_L");
      detail::require_positive(h.b0_L, "b0_L");
      detail::require_pd(h.sigma_mu, d, "Sigma_mu");
      break;
    case CovarianceModel::M6_ClusterIW:
      if (!(h.nu0 > d - 1.0))
        throw ValidationError("IWDegreesTooSmall", "need nu0 > d - 1");
      detail::require_pd(h.V0, d, "V0");
      detail::require_positive(h.k0, "k0");
      break;
    case CovarianceModel::M7_ClusterLaplace:
    case CovarianceModel::M8_ClusterNormal:
      detail::require_positive(h.a0, "a0");
      detail::require_positive(h.b0, "b0");
      detail::require_positive(h.c0, "c0");
      detail::require_positive(h.k0, "k0");
      break;
  }
}

}  // namespace dpmix
