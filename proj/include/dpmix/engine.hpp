#pragma once

#include <chrono>
#include <cstdint>
#include <future>
#include <numeric>
#include <vector>

#include "dpmix/moments.hpp"
#include "dpmix/params.hpp"
#include "dpmix/rng.hpp"

namespace dpmix {

namespace detail {
inline double sq(double x) { return x * x; }
}

// Rows drawn from a flat Dirichlet over K categories, deterministic in seed.
inline Responsibilities init_responsibilities(Index n, Index K, std::uint64_t seed) {
  if (n < 2) throw DomainError("need n >= 2");
  if (K < 2) throw DomainError("need K >= 2");
  Rng rng(seed);
  Responsibilities q;
  q.q.resize(n, K);
  for (Index i = 0; i < n; ++i) rng.dirichlet_row(q.q.row(i));
  return q;
}

inline std::vector<int> hard_assignments(const Responsibilities& q) {
  std::vector<int> z(q.n());
  for (Index i = 0; i < q.n(); ++i) {
    Index arg = 0;
    double best = q.q(i, 0);
    for (Index k = 1; k < q.k(); ++k)
      if (q.q(i, k) > best) {  // strict: lowest index wins exact ties
        best = q.q(i, k);
        arg = k;
      }
    z[i] = static_cast<int>(arg);
  }
  return z;
}

inline int count_distinct(const std::vector<int>& z) {
  std::vector<int> s(z);
  std::sort(s.begin(), s.end());
  return static_cast<int>(std::unique(s.begin(), s.end()) - s.begin());
}

// Position (1-based) of the last cluster occupied under hard assignment.
inline int last_occupied(const Responsibilities& q) {
  int t = 1;
  for (int zi : hard_assignments(q)) t = std::max(t, zi + 1);
  return t;
}

// Concentration update: w1 = a + t - 1 and the log-ratio bracket of the
// count moments, stabilized at a0s (previous E[alpha] by default). If the
// variance corrections drive w2 nonpositive, they are dropped.
inline AlphaState update_alpha(const CountMoments& m, const Hyperparams& h, int t,
                               const AlphaState& prev) {
  using detail::sq;
  if (t < 1 || t > m.k()) throw IndexOutOfRange("t must be in [1, K]");
  const double a0s =
      h.alpha_stabilizer == AlphaStabilizer::PrevMean ? prev.mean() : 1.0;
  AlphaState out;
  out.w1 = h.a + t - 1.0;
  auto bracket = [&](bool with_var) {
    double w2 = h.b;
    for (int k = 0; k + 1 < t; ++k) {
      w2 += std::log(a0s + m.e_ge(k)) - std::log(a0s + m.e_gt(k));
      if (with_var)
        w2 += -m.v_ge(k) / sq(a0s + m.e_ge(k)) + m.v_gt(k) / sq(a0s + m.e_gt(k));
    }
    w2 += std::log(a0s + m.e(t - 1)) - std::log(a0s + 1.0);
    if (with_var) w2 -= m.v(t - 1) / sq(a0s + m.e(t - 1));
    return w2;
  };
  double w2 = bracket(true);
  if (!(w2 > 0.0)) w2 = bracket(false);
  if (!(w2 > 0.0)) w2 = h.b;
  out.w2 = w2;
  return out;
}

// One sequential sweep of the collapsed responsibility update. `loglik`
// holds E_q[log p(x_n|mu_k, Sigma_k)] for the current parameters; moments
// are refreshed incrementally after each row. Returns the largest
// row-wise max-norm change.
inline double update_responsibilities(const RowMatrix& loglik, const AlphaState& alpha,
                                      Responsibilities& q, CountMoments& m) {
  using detail::sq;
  const Index N = q.n(), K = q.k();
  const double ab = alpha.mean(), av = alpha.var();
  Vector scores(K);
  Eigen::ArrayXd newrow(K);
  CountMoments loo;
  double max_dq = 0.0;
  for (Index n = 0; n < N; ++n) {
    loo = m;
    loo.subtract_row(q.q.row(n));
    double prefix = 0.0;
    for (Index k = 0; k < K; ++k) {
      scores(k) = std::log1p(loo.e(k)) - loo.v(k) / sq(1.0 + loo.e(k)) -
                  std::log(1.0 + loo.e_ge(k) + ab) +
                  (loo.v_ge(k) + av) / sq(1.0 + loo.e_ge(k) + ab) + prefix +
                  loglik(n, k);
      prefix += std::log(ab + loo.e_gt(k)) -
                (loo.v_gt(k) + av) / sq(ab + loo.e_gt(k)) -
                std::log(1.0 + ab + loo.e_ge(k)) +
                (loo.v_ge(k) + av) / sq(1.0 + ab + loo.e_ge(k));
    }
    const double lse = log_sum_exp(scores);
    newrow = (scores.array() - lse).exp();
    newrow /= newrow.sum();
    max_dq = std::max(max_dq,
                      (newrow - q.q.row(n).transpose().array()).abs().maxCoeff());
    m.subtract_row(q.q.row(n));
    q.q.row(n) = newrow.transpose();
    m.add_row(q.q.row(n));
  }
  return max_dq;
}

// Convenience overload recomputing the likelihood matrix.
inline double update_responsibilities(const DataMatrix& X, const ClusterParams& P,
                                      const AlphaState& alpha, Responsibilities& q,
                                      CountMoments& m, Workspace& ws) {
  const RowMatrix loglik = expected_loglik(X, P, ws);
  return update_responsibilities(loglik, alpha, q, m);
}

// Sort clusters by decreasing soft mass (stable on ties). Returns the
// permutation applied (perm[new] = old); identity when already sorted.
inline std::vector<Index> reorder_clusters(Responsibilities& q, ClusterParams& P) {
  const Index K = q.k();
  Eigen::ArrayXd mass = q.q.colwise().sum().array();
  std::vector<Index> perm(K);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::stable_sort(perm.begin(), perm.end(),
                   [&](Index a, Index b) { return mass(a) > mass(b); });
  bool identity = true;
  for (Index k = 0; k < K; ++k)
    if (perm[k] != k) { identity = false; break; }
  if (identity) return perm;
  RowMatrix tmp(q.n(), K);
  for (Index k = 0; k < K; ++k) tmp.col(k) = q.q.col(perm[k]);
  q.q = std::move(tmp);
  P.permute(perm);
  return perm;
}

namespace detail {

inline double gamma_prior_term(double a0, double b0, double a, double b) {
  return a0 * std::log(b0) - log_gamma(a0) + (a0 - 1.0) * (digamma(a) - std::log(b)) -
         b0 * a / b;
}

inline double gamma_entropy(double a, double b) {
  return a - std::log(b) + log_gamma(a) + (1.0 - a) * digamma(a);
}

// E[log p(Sigma)] - E[log q(Sigma)] for one inverse-Wishart block.
inline double iw_block(double nu0, double logdetV0, const Matrix& V0, double nu,
                       double logdetV, const Matrix& Vinv, double eld, Index d) {
  const double dd = static_cast<double>(d);
  const double prior = 0.5 * nu0 * logdetV0 - 0.5 * nu0 * dd * std::log(2.0) -
                       log_multigamma(d, 0.5 * nu0) + 0.5 * (nu0 + dd + 1.0) * eld -
                       0.5 * nu * V0.cwiseProduct(Vinv).sum();
  const double eqlog = 0.5 * nu * logdetV - 0.5 * nu * dd * std::log(2.0) -
                       log_multigamma(d, 0.5 * nu) + 0.5 * (nu + dd + 1.0) * eld -
                       0.5 * nu * dd;
  return prior - eqlog;
}

// Collapsed allocation prior E[log p(Z|alpha)], assembled with the same
// plug-in variance corrections as Eq. 4. Written so that an exactly-empty
// trailing cluster contributes exactly zero. Sticks 1..K-1 only; the last
// truncated stick is deterministic.
inline double z_prior_term(const CountMoments& m, const AlphaState& alpha) {
  const double ab = alpha.mean(), av = alpha.var();
  const Index K = m.k();
  double total = 0.0;
  for (Index k = 0; k + 1 < K; ++k) {
    total += log_gamma(m.e(k) + 1.0) + m.v(k) * trigamma(m.e(k) + 1.0);
    total += log_gamma(m.e_gt(k) + 1.0 + ab) +
             (m.v_gt(k) + av) * trigamma(m.e_gt(k) + 1.0 + ab);
    total -= log_gamma(m.e_ge(k) + 1.0 + ab) +
             (m.v_ge(k) + av) * trigamma(m.e_ge(k) + 1.0 + ab);
    total += std::log(ab) - av / sq(ab);
    total -= std::log(m.e_gt(k) + ab) - (m.v_gt(k) + av) / sq(m.e_gt(k) + ab);
  }
  return total;
}

inline double z_entropy_term(const Responsibilities& q) {
  double h = 0.0;
  for (Index i = 0; i < q.n(); ++i)
    for (Index k = 0; k < q.k(); ++k) {
      const double p = q.q(i, k);
      if (p > 0.0) h -= p * std::log(p);
    }
  return h;
}

inline double logdet_lambda(const ClusterParams& P, Index k) {
  if (P.lambda_diag.size() > 0)
    return P.lambda_diag.row(k).array().log().sum();
  return cholesky(SymMatrix(P.lambda_full[k])).log_det();
}

// Prior and entropy of the q(mu_k) blocks.
inline double mu_terms(const ClusterParams& P, const Hyperparams& h) {
  const Index d = P.d;
  const double dd = static_cast<double>(d);
  double total = 0.0;
  for (Index k = 0; k < P.K; ++k) {
    total += 0.5 * (dd * (kLogTwoPi + 1.0) + logdet_lambda(P, k));  // entropy
    if (!is_cluster_specific(P.model)) {
      const Vector phi = P.phi.row(k).transpose();
      const double quad = phi.dot(P.sigma_mu_inv * phi) +
                          P.sigma_mu_inv.cwiseProduct(P.lambda_full[k]).sum();
      total += -0.5 * (dd * kLogTwoPi + P.logdet_sigma_mu) - 0.5 * quad;
    } else {
      double quad = P.tr_prec_lambda(k);
      if (P.model == CovarianceModel::M6_ClusterIW) {
        const Vector phi = P.phi.row(k).transpose();
        quad += P.nu(k) * phi.dot(P.Vinv[k] * phi);
      } else {
        quad += (P.gam_a(k) * P.phi.row(k).array().square() /
                 P.gam_b.row(k).array())
                    .sum();
        if (P.model == CovarianceModel::M8_ClusterNormal) {
          const Vector phi = P.phi.row(k).transpose();
          quad += phi.dot(P.offdiag[k] * phi);
        }
      }
      total += -0.5 * dd * kLogTwoPi + 0.5 * dd * std::log(h.k0) + 0.5 * P.eld(k) -
               0.5 * h.k0 * quad;
    }
  }
  return total;
}

// Prior and entropy of the covariance blocks.
inline double sigma_terms(const ClusterParams& P, const Hyperparams& h) {
  const Index d = P.d;
  double total = 0.0;
  switch (P.model) {
    case CovarianceModel::M1_FixedDiag:
    case CovarianceModel::M2_FixedFull:
      break;
    case CovarianceModel::M3_GlobalDiag:
      total += gamma_prior_term(h.g1, h.g2, P.g1p, P.g2p) +
               gamma_entropy(P.g1p, P.g2p);
      break;
    case CovarianceModel::M4_GlobalIW:
      total += iw_block(h.nu0, P.logdetV0, P.V0_dense, P.nu_g, P.logdetV_g,
                        P.Vinv_g, P.eld(0), d);
      break;
    case CovarianceModel::M5_GlobalCholesky: {
      for (Index i = 0; i < d; ++i)
        total += gamma_prior_term(h.a0_L, h.b0_L, P.chol_ga(i), P.chol_gb(i)) +
                 gamma_entropy(P.chol_ga(i), P.chol_gb(i));
      for (Index i = 1; i < d; ++i)
        for (Index j = 0; j < i; ++j) {
          const double s2 = P.chol_var(i, j);
          const double dm = P.chol_mean(i, j) - h.mu0_L;
          total += -0.5 * (kLogTwoPi + std::log(h.sigma0_L)) -
                   (s2 + dm * dm) / (2.0 * h.sigma0_L);
          total += 0.5 * (kLogTwoPi + std::log(s2) + 1.0);
        }
      break;
    }
    case CovarianceModel::M6_ClusterIW:
      for (Index k = 0; k < P.K; ++k)
        total += iw_block(h.nu0, P.logdetV0, P.V0_dense, P.nu(k), P.logdetV(k),
                          P.Vinv[k], P.eld(k), d);
      break;
    case CovarianceModel::M7_ClusterLaplace:
    case CovarianceModel::M8_ClusterNormal: {
      const double dd = static_cast<double>(d);
      for (Index k = 0; k < P.K; ++k) {
        const double ak = P.gam_a(k);
        const double sum_log_b = P.gam_b.row(k).array().log().sum();
        const double sum_inv_b = P.gam_b.row(k).array().inverse().sum();
        // prior: sum_i a0 log b0 - lgG(a0) + (a0-1) E[log l_i] - b0 E[l_i]
        total += dd * (h.a0 * std::log(h.b0) - log_gamma(h.a0)) +
                 (h.a0 - 1.0) * P.eld(k) - h.b0 * ak * sum_inv_b;
        // entropy: sum_i a - log b_i + lgG(a) + (1-a) psi(a)
        total += dd * (ak + log_gamma(ak) + (1.0 - ak) * digamma(ak)) - sum_log_b;
        total += P.offdiag_elbo(k);
      }
      break;
    }
  }
  return total;
}

}  // namespace detail

struct ElboParts {
  double elbo = 0.0;
  double vll = 0.0;
};

inline ElboParts elbo_parts(const RowMatrix& loglik, const Responsibilities& q,
                            const CountMoments& m, const ClusterParams& P,
                            const AlphaState& alpha, const Hyperparams& h) {
  ElboParts out;
  out.vll = (q.q.array() * loglik.array()).sum();
  const double alpha_prior = h.a * std::log(h.b) - log_gamma(h.a) +
                             (h.a - 1.0) * (digamma(alpha.w1) - std::log(alpha.w2)) -
                             h.b * alpha.mean();
  const double alpha_entropy = alpha.w1 - std::log(alpha.w2) + log_gamma(alpha.w1) +
                               (1.0 - alpha.w1) * digamma(alpha.w1);
  out.elbo = out.vll + detail::z_prior_term(m, alpha) + detail::z_entropy_term(q) +
             alpha_prior + alpha_entropy + detail::mu_terms(P, h) +
             detail::sigma_terms(P, h);
  return out;
}

// Variational log-likelihood E_q[log p(X|Z, parameters)].
inline double vll(const DataMatrix& X, const Responsibilities& q,
                  const ClusterParams& P) {
  Workspace ws;
  ws.bind(X, P.model);
  const RowMatrix loglik = expected_loglik(X, P, ws);
  return (q.q.array() * loglik.array()).sum();
}

inline double elbo(const DataMatrix& X, const Responsibilities& q,
                   const ClusterParams& P, const AlphaState& alpha,
                   const Hyperparams& h) {
  Workspace ws;
  ws.bind(X, P.model);
  const RowMatrix loglik = expected_loglik(X, P, ws);
  const CountMoments m = count_moments(q);
  return elbo_parts(loglik, q, m, P, alpha, h).elbo;
}

struct IterRecord {
  double elbo = 0.0;
  double vll = 0.0;
  double e_alpha = 0.0;
  int t = 0;
};

struct FitResult {
  std::vector<int> assignments;  // 0-based hard labels
  int k_post = 0;
  Responsibilities q;
  AlphaState alpha;
  ClusterParams clusters;
  std::vector<IterRecord> trace;
  double vll = 0.0;
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;  // derived seed of the selected restart
  int restart_index = 0;
  double wall_time_s = 0.0;

  std::vector<double> elbo_trace() const {
    std::vector<double> e;
    e.reserve(trace.size());
    for (const auto& r : trace) e.push_back(r.elbo);
    return e;
  }
};

// One restart: random init then coordinate sweeps
// (mu/Sigma -> t -> alpha -> z -> reorder -> ELBO) until converged.
inline FitResult fit_single(const DataMatrix& X, CovarianceModel model,
                            const Hyperparams& h, std::uint64_t seed,
                            int max_iter_override = 0, bool track_convergence = true) {
  const Index N = X.n(), d = X.d();
  const Index K = h.truncation;
  const int max_iter = max_iter_override > 0 ? max_iter_override : h.max_iter;

  Workspace ws;
  ws.bind(X, model);
  FitResult R;
  R.seed = seed;
  R.q = init_responsibilities(N, K, seed);
  R.clusters = init_cluster_params(model, h, d, K);
  R.alpha = AlphaState{h.a, h.b};
  CountMoments m = count_moments(R.q);

  double prev_elbo = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    R.iterations = it;
    update_mu_sigma(X, R.q, h, ws, R.clusters);
    const int t = last_occupied(R.q);
    R.alpha = update_alpha(m, h, t, R.alpha);
    RowMatrix loglik = expected_loglik(X, R.clusters, ws);
    const double max_dq = update_responsibilities(loglik, R.alpha, R.q, m);
    const std::vector<Index> perm = reorder_clusters(R.q, R.clusters);
    {
      RowMatrix tmp(loglik.rows(), loglik.cols());
      for (Index k = 0; k < K; ++k) tmp.col(k) = loglik.col(perm[k]);
      loglik = std::move(tmp);
    }
    m = count_moments(R.q);  // full recompute bounds incremental drift
    const ElboParts parts = elbo_parts(loglik, R.q, m, R.clusters, R.alpha, h);
    R.trace.push_back(IterRecord{parts.elbo, parts.vll, R.alpha.mean(), t});
    if (track_convergence && it > 1) {
      const double rel =
          std::abs(parts.elbo - prev_elbo) / (1.0 + std::abs(parts.elbo));
      if (rel < h.rel_tol && max_dq < 1e-6) {
        R.converged = true;
        break;
      }
    }
    prev_elbo = parts.elbo;
  }

  R.assignments = hard_assignments(R.q);
  R.k_post = count_distinct(R.assignments);
  R.vll = R.trace.back().vll;
  return R;
}

// Multi-restart fit; restart r uses seed h.seed + r, the restart with the
// highest VLL wins (lowest index on ties). Restarts are independent, so the
// result does not depend on `threads`.
inline FitResult fit(const DataMatrix& X, CovarianceModel model, const Hyperparams& h,
                     int threads = 1) {
  validate(h, model, static_cast<int>(X.d()));
  if (X.n() < 2) throw ValidationError("InvalidDimension", "need N >= 2");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<FitResult> results(h.restarts);
  auto run = [&](int r) {
    try {
      results[r] = fit_single(X, model, h, h.seed + static_cast<std::uint64_t>(r));
      results[r].restart_index = r;
    } catch (const Error& e) {
      throw Error(e.code(), "restart " + std::to_string(r) + ": " + e.what());
    }
  };
  if (threads <= 1 || h.restarts == 1) {
    for (int r = 0; r < h.restarts; ++r) run(r);
  } else {
    int next = 0;
    while (next < h.restarts) {
      std::vector<std::future<void>> batch;
      for (int i = 0; i < threads && next < h.restarts; ++i, ++next)
        batch.push_back(std::async(std::launch::async, run, next));
      for (auto& f : batch) f.get();
    }
  }

  int best = 0;
  for (int r = 1; r < h.restarts; ++r)
    if (results[r].vll > results[best].vll) best = r;
  FitResult out = std::move(results[best]);
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace dpmix
