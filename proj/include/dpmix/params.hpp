#pragma once

#include <cmath>
#include <vector>

#include "dpmix/data.hpp"
#include "dpmix/gammafn.hpp"
#include "dpmix/linalg.hpp"
#include "dpmix/model.hpp"
#include "dpmix/moments.hpp"

namespace dpmix {

constexpr double kLogTwoPi = 1.8378770664093454836;
// M8 fixes the off-diagonal Gaussian variance at 1e-6 (not a tunable).
constexpr double kM8Var = 1e-6;

// Variational Gamma posterior of the DP concentration.
struct AlphaState {
  double w1 = 1.0;
  double w2 = 1.0;
  double mean() const { return w1 / w2; }
  double var() const { return w1 / (w2 * w2); }
};

// Scratch buffers shared across sweeps of one fit.
struct Workspace {
  RowMatrix xsq;       // elementwise squares of the data, N x d
  Vector rowsq;        // squared row norms, N
  RowMatrix xabs;      // elementwise |x|, N x d (M7 only)
  Matrix gram;         // d x d scratch
  RowMatrix weighted;  // N x d scratch

  void bind(const DataMatrix& X, CovarianceModel model) {
    xsq = X.x().array().square();
    rowsq = X.x().rowwise().squaredNorm();
    if (model == CovarianceModel::M7_ClusterLaplace) xabs = X.x().array().abs();
  }
};

// All variational parameters of the mean/covariance blocks, for every model.
// Only the members matching `model` are populated.
struct ClusterParams {
  CovarianceModel model = CovarianceModel::M7_ClusterLaplace;
  Index K = 0, d = 0;

  RowMatrix phi;                    // K x d variational means of mu_k
  std::vector<Matrix> lambda_full;  // variational covariances (M1-M6)
  RowMatrix lambda_diag;            // K x d diagonal covariances (M7/M8)

  double g1p = 1.0, g2p = 1.0;  // M3: q(sigma) = Gamma(g1p, g2p)

  double nu_g = 0.0;  // M4 global inverse-Wishart
  Matrix V_g, Vinv_g;
  double logdetV_g = 0.0;

  Eigen::ArrayXd nu;  // M6 per-cluster inverse-Wishart
  std::vector<Matrix> V, Vinv;
  Eigen::ArrayXd logdetV;

  Eigen::ArrayXd gam_a;  // M7/M8 diagonal Gammas: a_k (equal across i)
  RowMatrix gam_b;       // K x d rates b_ki

  // M8: E[Sigma_k^{-1}] off-diagonal means c_kij (zero diagonal). For M7 the
  // same slots hold the Laplace scales c_kij, materialized only when d is
  // small enough to store K dense matrices; the engine itself never reads
  // them (expected off-diagonals are zero under the zero-located Laplace).
  std::vector<Matrix> offdiag;
  // Off-diagonal prior-minus-entropy ELBO contribution per cluster (M7/M8),
  // evaluated at update time from the same responsibilities as c_kij.
  Eigen::ArrayXd offdiag_elbo;

  Matrix chol_mean, chol_var;       // M5 strictly-lower element posteriors
  Eigen::ArrayXd chol_ga, chol_gb;  // M5 diagonal: q(L_ii^2) = Gamma(ga, gb)

  // Caches refreshed by every update.
  Matrix Eprec;               // dense global E[Sigma^{-1}] (M2/M4/M5)
  double Eprec_scalar = 1.0;  // M1: sigma, M3: E[sigma]
  Eigen::ArrayXd eld;             // E_q[log det Sigma_k^{-1}] per cluster
  Eigen::ArrayXd tr_prec_lambda;  // tr(E[Sigma_k^{-1}] Lambda_k) per cluster

  // Prior-derived constants.
  Matrix sigma_mu_inv;
  double logdet_sigma_mu = 0.0;
  Matrix V0_dense;
  double logdetV0 = 0.0;

  static constexpr Index kOffdiagMaterializeLimit = 512;

  void permute(const std::vector<Index>& perm) {
    auto permuted_rows = [&](const RowMatrix& m) {
      RowMatrix out(m.rows(), m.cols());
      for (Index k = 0; k < static_cast<Index>(perm.size()); ++k)
        out.row(k) = m.row(perm[k]);
      return out;
    };
    auto permuted_arr = [&](const Eigen::ArrayXd& v) {
      Eigen::ArrayXd out(v.size());
      for (Index k = 0; k < static_cast<Index>(perm.size()); ++k) out(k) = v(perm[k]);
      return out;
    };
    auto permuted_mats = [&](std::vector<Matrix>& ms) {
      if (ms.empty()) return;
      std::vector<Matrix> out(ms.size());
      for (std::size_t k = 0; k < perm.size(); ++k) out[k] = std::move(ms[perm[k]]);
      ms = std::move(out);
    };
    phi = permuted_rows(phi);
    permuted_mats(lambda_full);
    if (lambda_diag.size() > 0) lambda_diag = permuted_rows(lambda_diag);
    if (nu.size() > 0) nu = permuted_arr(nu);
    permuted_mats(V);
    permuted_mats(Vinv);
    if (logdetV.size() > 0) logdetV = permuted_arr(logdetV);
    if (gam_a.size() > 0) gam_a = permuted_arr(gam_a);
    if (gam_b.size() > 0) gam_b = permuted_rows(gam_b);
    permuted_mats(offdiag);
    if (offdiag_elbo.size() > 0) offdiag_elbo = permuted_arr(offdiag_elbo);
    eld = permuted_arr(eld);
    tr_prec_lambda = permuted_arr(tr_prec_lambda);
  }
};

namespace detail {

inline double iw_elogdet_prec(double nu, Index d, double logdetV) {
  double s = 0.0;
  for (Index i = 1; i <= d; ++i) s += digamma(0.5 * (nu + 1.0 - i));
  return s + d * std::log(2.0) - logdetV;
}

inline void factorize_iw(const Matrix& Vk, Matrix& Vinv, double& logdet) {
  CholeskyFactor f = cholesky(SymMatrix(Vk));
  logdet = f.log_det();
  Vinv = f.inverse();
}

inline double expected_lii(double ga, double gb) {
  // E[sqrt(Gamma(ga, gb))] = Gamma(ga + 1/2) / Gamma(ga) / sqrt(gb)
  return std::exp(log_gamma(ga + 0.5) - log_gamma(ga)) / std::sqrt(gb);
}

// E[L L^T] from independent element posteriors of the lower factor.
inline Matrix m5_expected_precision(const ClusterParams& P) {
  const Index d = P.d;
  Matrix EL = P.chol_mean;
  for (Index i = 0; i < d; ++i) EL(i, i) = expected_lii(P.chol_ga(i), P.chol_gb(i));
  Matrix M = EL * EL.transpose();
  for (Index i = 0; i < d; ++i) {
    double diag = P.chol_ga(i) / P.chol_gb(i);
    for (Index c = 0; c < i; ++c)
      diag += P.chol_mean(i, c) * P.chol_mean(i, c) + P.chol_var(i, c);
    M(i, i) = diag;
  }
  return M;
}

inline double m5_elogdet_prec(const ClusterParams& P) {
  double eld = 0.0;
  for (Index i = 0; i < P.d; ++i)
    eld += digamma(P.chol_ga(i)) - std::log(P.chol_gb(i));
  return eld;
}

inline bool scalar_prec(CovarianceModel m) {
  return m == CovarianceModel::M1_FixedDiag || m == CovarianceModel::M3_GlobalDiag;
}

}  // namespace detail

// Parameters at their prior / empty-cluster fixed point. Also the state an
// empty cluster relaxes back to under the updates.
inline ClusterParams init_cluster_params(CovarianceModel model, const Hyperparams& h,
                                         Index d, Index K) {
  ClusterParams P;
  P.model = model;
  P.K = K;
  P.d = d;
  P.phi = RowMatrix::Zero(K, d);
  P.eld.setZero(K);
  P.tr_prec_lambda.setZero(K);

  if (!is_cluster_specific(model)) {
    Matrix sm = h.sigma_mu.materialize(d);
    CholeskyFactor f = cholesky(SymMatrix(sm));
    P.sigma_mu_inv = f.inverse();
    P.logdet_sigma_mu = f.log_det();
    P.lambda_full.assign(K, sm);
  }

  switch (model) {
    case CovarianceModel::M1_FixedDiag:
      P.Eprec_scalar = h.fixed_sigma;
      P.eld.setConstant(d * std::log(h.fixed_sigma));
      for (Index k = 0; k < K; ++k)
        P.tr_prec_lambda(k) = P.Eprec_scalar * P.lambda_full[k].trace();
      break;
    case CovarianceModel::M2_FixedFull: {
      CholeskyFactor f = cholesky(SymMatrix(h.fixed_Sigma.materialize(d)));
      P.Eprec = f.inverse();
      P.eld.setConstant(-f.log_det());
      for (Index k = 0; k < K; ++k)
        P.tr_prec_lambda(k) = P.Eprec.cwiseProduct(P.lambda_full[k]).sum();
      break;
    }
    case CovarianceModel::M3_GlobalDiag:
      P.g1p = h.g1;
      P.g2p = h.g2;
      P.Eprec_scalar = P.g1p / P.g2p;
      P.eld.setConstant(d * (digamma(P.g1p) - std::log(P.g2p)));
      for (Index k = 0; k < K; ++k)
        P.tr_prec_lambda(k) = P.Eprec_scalar * P.lambda_full[k].trace();
      break;
    case CovarianceModel::M4_GlobalIW: {
      P.V0_dense = h.V0.materialize(d);
      P.nu_g = h.nu0;
      P.V_g = P.V0_dense;
      detail::factorize_iw(P.V_g, P.Vinv_g, P.logdetV_g);
      P.logdetV0 = P.logdetV_g;
      P.Eprec = P.nu_g * P.Vinv_g;
      P.eld.setConstant(detail::iw_elogdet_prec(P.nu_g, d, P.logdetV_g));
      for (Index k = 0; k < K; ++k)
        P.tr_prec_lambda(k) = P.Eprec.cwiseProduct(P.lambda_full[k]).sum();
      break;
    }
    case CovarianceModel::M5_GlobalCholesky:
      P.chol_mean = Matrix::Constant(d, d, h.mu0_L);
      P.chol_mean.triangularView<Eigen::Upper>().setZero();
      P.chol_mean.diagonal().setZero();
      P.chol_var = Matrix::Constant(d, d, h.sigma0_L);
      P.chol_var.triangularView<Eigen::Upper>().setZero();
      P.chol_var.diagonal().setZero();
      P.chol_ga.setConstant(d, h.a0_L);
      P.chol_gb.setConstant(d, h.b0_L);
      P.Eprec = detail::m5_expected_precision(P);
      P.eld.setConstant(detail::m5_elogdet_prec(P));
      for (Index k = 0; k < K; ++k)
        P.tr_prec_lambda(k) = P.Eprec.cwiseProduct(P.lambda_full[k]).sum();
      break;
    case CovarianceModel::M6_ClusterIW: {
      P.V0_dense = h.V0.materialize(d);
      CholeskyFactor f = cholesky(SymMatrix(P.V0_dense));
      P.logdetV0 = f.log_det();
      P.nu.setConstant(K, h.nu0 + 1.0);
      P.V.assign(K, P.V0_dense);
      P.Vinv.assign(K, f.inverse());
      P.logdetV.setConstant(K, P.logdetV0);
      P.lambda_full.assign(K, Matrix());
      for (Index k = 0; k < K; ++k) {
        P.lambda_full[k] = P.V[k] / (P.nu(k) * h.k0);
        P.eld(k) = detail::iw_elogdet_prec(P.nu(k), d, P.logdetV(k));
        P.tr_prec_lambda(k) = P.nu(k) * P.Vinv[k].cwiseProduct(P.lambda_full[k]).sum();
      }
      break;
    }
    case CovarianceModel::M7_ClusterLaplace:
    case CovarianceModel::M8_ClusterNormal: {
      P.gam_a.setConstant(K, h.a0 + 1.0);
      P.gam_b = RowMatrix::Constant(K, d, h.b0);
      P.lambda_diag = RowMatrix::Constant(K, d, h.b0 / ((h.a0 + 1.0) * h.k0));
      P.offdiag_elbo.setZero(K);
      const bool store = (model == CovarianceModel::M8_ClusterNormal) ||
                         d <= ClusterParams::kOffdiagMaterializeLimit;
      if (store) {
        Matrix c = Matrix::Constant(d, d, h.c0);
        c.diagonal().setZero();
        P.offdiag.assign(K, c);
      }
      for (Index k = 0; k < K; ++k) {
        P.eld(k) = d * digamma(P.gam_a(k)) - P.gam_b.row(k).array().log().sum();
        P.tr_prec_lambda(k) = d / h.k0;
      }
      break;
    }
  }
  return P;
}

namespace detail {

// Gaussian mean/covariance update shared by the global-covariance models:
// Lambda_k = (Sigma_mu^{-1} + m_k E[Sigma^{-1}])^{-1},
// phi_k    = Lambda_k E[Sigma^{-1}] sum_n q_nk x_n.
inline void update_mu_global(const Eigen::ArrayXd& mass, const Matrix& Sx,
                             ClusterParams& P) {
  const bool scalar = scalar_prec(P.model);
  for (Index k = 0; k < P.K; ++k) {
    Matrix prec = P.sigma_mu_inv;
    if (scalar)
      prec.diagonal().array() += mass(k) * P.Eprec_scalar;
    else
      prec += mass(k) * P.Eprec;
    CholeskyFactor f = cholesky(SymMatrix(prec));
    P.lambda_full[k] = f.inverse();
    Vector rhs = scalar ? Vector(P.Eprec_scalar * Sx.row(k).transpose())
                        : Vector(P.Eprec * Sx.row(k).transpose());
    P.phi.row(k) = f.solve(rhs).transpose();
  }
}

inline void refresh_global_traces(ClusterParams& P) {
  const bool scalar = scalar_prec(P.model);
  for (Index k = 0; k < P.K; ++k)
    P.tr_prec_lambda(k) = scalar
                              ? P.Eprec_scalar * P.lambda_full[k].trace()
                              : P.Eprec.cwiseProduct(P.lambda_full[k]).sum();
}

// sum_k [ sum_n q_nk |x_n - phi_k|^2 + m_k tr(Lambda_k) ], fused over k.
inline double weighted_scatter_trace(const Responsibilities& q, const Workspace& ws,
                                     const ClusterParams& P,
                                     const Eigen::ArrayXd& mass, const Matrix& Sx) {
  double total = 0.0;
  for (Index k = 0; k < P.K; ++k) {
    const double wss = q.q.col(k).dot(ws.rowsq) -
                       2.0 * Sx.row(k).dot(P.phi.row(k)) +
                       mass(k) * P.phi.row(k).squaredNorm();
    total += wss + mass(k) * P.lambda_full[k].trace();
  }
  return total;
}

// Scatter sum_k [ B_k^T diag(q_k) B_k + m_k Lambda_k ] with B_k = X - phi_k.
inline Matrix centered_scatter(const DataMatrix& X, const Responsibilities& q,
                               const ClusterParams& P, const Eigen::ArrayXd& mass,
                               RowMatrix& scratch) {
  const Index d = P.d;
  Matrix S = Matrix::Zero(d, d);
  for (Index k = 0; k < P.K; ++k) {
    scratch = X.x();
    scratch.rowwise() -= P.phi.row(k);
    scratch.array().colwise() *= q.q.col(k).array().sqrt();
    S.selfadjointView<Eigen::Lower>().rankUpdate(scratch.transpose());
  }
  Matrix out = S.selfadjointView<Eigen::Lower>();
  for (Index k = 0; k < P.K; ++k) out += mass(k) * P.lambda_full[k];
  return out;
}

inline void update_m5_elements(const Matrix& S, double n_total, const Hyperparams& h,
                               ClusterParams& P) {
  // Variational updates on the elements of the lower factor L of the global
  // precision L L^T. The log-determinant contributes n/2 to every diagonal
  // Gamma shape. The quadratic term -tr(L L^T S)/2 is handled per element:
  // off-diagonal elements are conjugate Gaussian given the rest of their
  // column; the diagonal cross-terms are linearized through E[L_jj]
  // (sqrt(lambda_j) ~ lambda_j / E[L_jj]), falling back to the diagonal-only
  // rate when the linearized rate is not positive.
  const Index d = P.d;
  for (Index j = 0; j < d; ++j) {
    P.chol_ga(j) = h.a0_L + 0.5 * n_total;
    const double eljj_prev = expected_lii(P.chol_ga(j), P.chol_gb(j));
    double cross = 0.0;
    for (Index r = j + 1; r < d; ++r) cross += P.chol_mean(r, j) * S(r, j);
    double rate = h.b0_L + 0.5 * S(j, j) + cross / eljj_prev;
    if (!(rate > 0.0)) rate = h.b0_L + 0.5 * S(j, j);
    P.chol_gb(j) = rate;
    const double eljj = expected_lii(P.chol_ga(j), P.chol_gb(j));
    for (Index i = j + 1; i < d; ++i) {
      const double prec = 1.0 / h.sigma0_L + S(i, i);
      double lin = h.mu0_L / h.sigma0_L - eljj * S(i, j);
      for (Index r = j + 1; r < d; ++r)
        if (r != i) lin -= P.chol_mean(r, j) * S(i, r);
      P.chol_mean(i, j) = lin / prec;
      P.chol_var(i, j) = 1.0 / prec;
    }
  }
}

}  // namespace detail

// One coordinate step of the mean/covariance blocks given responsibilities
// (Gaussian mean update first, covariance block second).
inline void update_mu_sigma(const DataMatrix& X, const Responsibilities& q,
                            const Hyperparams& h, Workspace& ws, ClusterParams& P) {
  const Index N = X.n(), d = P.d, K = P.K;
  if (q.k() != K || X.d() != d) throw ModelMismatch("state does not match data");
  const Eigen::ArrayXd mass = q.q.colwise().sum().array();
  const Matrix Sx = q.q.transpose() * X.x();  // K x d

  switch (P.model) {
    case CovarianceModel::M1_FixedDiag:
    case CovarianceModel::M2_FixedFull:
      detail::update_mu_global(mass, Sx, P);
      detail::refresh_global_traces(P);
      break;

    case CovarianceModel::M3_GlobalDiag: {
      detail::update_mu_global(mass, Sx, P);
      P.g1p = h.g1 + 0.5 * N * d;
      P.g2p = h.g2 + 0.5 * detail::weighted_scatter_trace(q, ws, P, mass, Sx);
      P.Eprec_scalar = P.g1p / P.g2p;
      P.eld.setConstant(d * (digamma(P.g1p) - std::log(P.g2p)));
      detail::refresh_global_traces(P);
      break;
    }

    case CovarianceModel::M4_GlobalIW: {
      detail::update_mu_global(mass, Sx, P);
      P.nu_g = h.nu0 + N;
      P.V_g = P.V0_dense + detail::centered_scatter(X, q, P, mass, ws.weighted);
      detail::factorize_iw(P.V_g, P.Vinv_g, P.logdetV_g);
      P.Eprec = P.nu_g * P.Vinv_g;
      P.eld.setConstant(detail::iw_elogdet_prec(P.nu_g, d, P.logdetV_g));
      detail::refresh_global_traces(P);
      break;
    }

    case CovarianceModel::M5_GlobalCholesky: {
      detail::update_mu_global(mass, Sx, P);
      const Matrix S = detail::centered_scatter(X, q, P, mass, ws.weighted);
      detail::update_m5_elements(S, static_cast<double>(N), h, P);
      P.Eprec = detail::m5_expected_precision(P);
      P.eld.setConstant(detail::m5_elogdet_prec(P));
      detail::refresh_global_traces(P);
      break;
    }

    case CovarianceModel::M6_ClusterIW: {
      for (Index k = 0; k < K; ++k) {
        P.nu(k) = h.nu0 + 1.0 + mass(k);
        ws.weighted = X.x();
        ws.weighted.array().colwise() *= q.q.col(k).array().sqrt();
        Matrix Vk = P.V0_dense;
        Vk.selfadjointView<Eigen::Lower>().rankUpdate(ws.weighted.transpose());
        P.V[k] = Vk.selfadjointView<Eigen::Lower>();
        detail::factorize_iw(P.V[k], P.Vinv[k], P.logdetV(k));
        const double denom = h.k0 + mass(k);
        P.lambda_full[k] = P.V[k] / (P.nu(k) * denom);
        P.phi.row(k) = Sx.row(k) / denom;
        P.eld(k) = detail::iw_elogdet_prec(P.nu(k), d, P.logdetV(k));
        P.tr_prec_lambda(k) =
            P.nu(k) * P.Vinv[k].cwiseProduct(P.lambda_full[k]).sum();
      }
      break;
    }

    case CovarianceModel::M7_ClusterLaplace:
    case CovarianceModel::M8_ClusterNormal: {
      P.gam_a = mass + (h.a0 + 1.0);
      P.gam_b = (0.5 * (q.q.transpose() * ws.xsq).array() + h.b0).matrix();
      const bool m8 = (P.model == CovarianceModel::M8_ClusterNormal);
      const bool store = !P.offdiag.empty();
      for (Index k = 0; k < K; ++k) {
        const double denom = h.k0 + mass(k);
        P.phi.row(k) = Sx.row(k) / denom;
        P.lambda_diag.row(k) = P.gam_b.row(k) / (P.gam_a(k) * denom);
        P.eld(k) = d * digamma(P.gam_a(k)) - P.gam_b.row(k).array().log().sum();
        P.tr_prec_lambda(k) =
            (P.gam_a(k) * P.lambda_diag.row(k).array() / P.gam_b.row(k).array())
                .sum();

        // Off-diagonal block: c_kij and its ELBO contribution, both from
        // this sweep's responsibilities.
        ws.weighted = m8 ? X.x() : ws.xabs;
        ws.weighted.array().colwise() *= q.q.col(k).array().sqrt();
        ws.gram.setZero(d, d);
        ws.gram.selfadjointView<Eigen::Lower>().rankUpdate(ws.weighted.transpose());
        double term = 0.0;
        if (m8) {
          // E[log p] - E[log q] per pair = -(c_kij - c0)^2 / (2 * 1e-6) with
          // c_kij = c0 - (1e-6 / 2) sum_n q_nk x_ni x_nj.
          for (Index i = 1; i < d; ++i)
            for (Index j = 0; j < i; ++j) {
              const double shift = 0.5 * kM8Var * ws.gram(i, j);
              term -= shift * shift / (2.0 * kM8Var);
              if (store)
                P.offdiag[k](i, j) = P.offdiag[k](j, i) = h.c0 - shift;
            }
        } else {
          // Laplace pair term = log(c_kij / c0) - c_kij / c0 + 1 with
          // c_kij = 1 / (1/c0 + sum_n q_nk |x_ni x_nj| / 2).
          const double inv_c0 = 1.0 / h.c0;
          for (Index i = 1; i < d; ++i)
            for (Index j = 0; j < i; ++j) {
              const double c = 1.0 / (inv_c0 + 0.5 * ws.gram(i, j));
              term += std::log(c * inv_c0) - c * inv_c0 + 1.0;
              if (store) P.offdiag[k](i, j) = P.offdiag[k](j, i) = c;
            }
        }
        P.offdiag_elbo(k) = term;
      }
      break;
    }
  }
}

// E_q[log p(x_n | mu_k, Sigma_k)] for every observation and cluster.
inline RowMatrix expected_loglik(const DataMatrix& X, const ClusterParams& P,
                                 Workspace& ws) {
  const Index N = X.n(), K = P.K, d = P.d;
  RowMatrix quad(N, K);

  switch (P.model) {
    case CovarianceModel::M1_FixedDiag:
    case CovarianceModel::M3_GlobalDiag: {
      RowMatrix cross = X.x() * P.phi.transpose();  // N x K
      for (Index k = 0; k < K; ++k)
        quad.col(k) = (P.Eprec_scalar *
                       (ws.rowsq.array() - 2.0 * cross.col(k).array() +
                        P.phi.row(k).squaredNorm()))
                          .matrix();
      break;
    }
    case CovarianceModel::M2_FixedFull:
    case CovarianceModel::M4_GlobalIW:
    case CovarianceModel::M5_GlobalCholesky: {
      RowMatrix T = X.x() * P.Eprec;  // N x d
      Vector xmx = (T.array() * X.x().array()).rowwise().sum();
      RowMatrix cross = T * P.phi.transpose();  // N x K
      for (Index k = 0; k < K; ++k) {
        const double pmp = P.phi.row(k) * P.Eprec * P.phi.row(k).transpose();
        quad.col(k) =
            (xmx.array() - 2.0 * cross.col(k).array() + pmp).matrix();
      }
      break;
    }
    case CovarianceModel::M6_ClusterIW: {
      for (Index k = 0; k < K; ++k) {
        ws.weighted = X.x();
        ws.weighted.rowwise() -= P.phi.row(k);
        RowMatrix T = ws.weighted * P.Vinv[k];
        quad.col(k) =
            (P.nu(k) * (T.array() * ws.weighted.array()).rowwise().sum())
                .matrix();
      }
      break;
    }
    case CovarianceModel::M7_ClusterLaplace:
    case CovarianceModel::M8_ClusterNormal: {
      RowMatrix W(K, d), WP(K, d);
      for (Index k = 0; k < K; ++k) {
        W.row(k) = (P.gam_a(k) / P.gam_b.row(k).array()).matrix();
        WP.row(k) = W.row(k).cwiseProduct(P.phi.row(k));
      }
      quad = ws.xsq * W.transpose() - 2.0 * (X.x() * WP.transpose());
      for (Index k = 0; k < K; ++k)
        quad.col(k).array() += W.row(k).dot(P.phi.row(k).cwiseAbs2());
      if (P.model == CovarianceModel::M8_ClusterNormal) {
        for (Index k = 0; k < K; ++k) {
          ws.weighted = X.x();
          ws.weighted.rowwise() -= P.phi.row(k);
          RowMatrix T = ws.weighted * P.offdiag[k];
          quad.col(k) +=
              (T.array() * ws.weighted.array()).rowwise().sum().matrix();
        }
      }
      break;
    }
  }

  RowMatrix out(N, K);
  for (Index k = 0; k < K; ++k)
    out.col(k) = (-0.5 * d * kLogTwoPi + 0.5 * P.eld(k) -
                  0.5 * (quad.col(k).array() + P.tr_prec_lambda(k)))
                     .matrix();
  return out;
}

// Single-point version of the same expectation.
inline double expected_log_density(const Vector& x, Index k, const ClusterParams& P) {
  if (k < 0 || k >= P.K) throw IndexOutOfRange("cluster index");
  if (x.size() != P.d) throw ModelMismatch("dimension mismatch");
  Vector y = x - P.phi.row(k).transpose();
  double quad = 0.0;
  switch (P.model) {
    case CovarianceModel::M1_FixedDiag:
    case CovarianceModel::M3_GlobalDiag:
      quad = P.Eprec_scalar * y.squaredNorm();
      break;
    case CovarianceModel::M2_FixedFull:
    case CovarianceModel::M4_GlobalIW:
    case CovarianceModel::M5_GlobalCholesky:
      quad = y.dot(P.Eprec * y);
      break;
    case CovarianceModel::M6_ClusterIW:
      quad = P.nu(k) * y.dot(P.Vinv[k] * y);
      break;
    case CovarianceModel::M7_ClusterLaplace:
    case CovarianceModel::M8_ClusterNormal:
      quad = (P.gam_a(k) * y.array().square() /
              P.gam_b.row(k).transpose().array())
                 .sum();
      if (P.model == CovarianceModel::M8_ClusterNormal) {
        if (P.offdiag.empty()) throw ModelMismatch("M8 off-diagonal block missing");
        quad += y.dot(P.offdiag[k] * y);
      }
      break;
  }
  return -0.5 * P.d * kLogTwoPi + 0.5 * P.eld(k) -
         0.5 * (quad + P.tr_prec_lambda(k));
}

}  // namespace dpmix
