#pragma once

#include <cmath>

#include "dpmix/linalg.hpp"

namespace dpmix {

// N x K allocation probabilities. Rows live on the simplex.
struct Responsibilities {
  RowMatrix q;

  Index n() const { return q.rows(); }
  Index k() const { return q.cols(); }

  void check(double tol = 1e-9) const {
    for (Index i = 0; i < q.rows(); ++i) {
      if (q.row(i).minCoeff() < 0.0)
        throw DomainError("negative responsibility in row " + std::to_string(i));
      if (std::abs(q.row(i).sum() - 1.0) > tol)
        throw DomainError("row " + std::to_string(i) + " does not sum to 1");
    }
  }
};

// Expectations and variances of the occupancy counts N_k, N_{>k}, N_{>=k}
// under independent categorical rows: sums of Bernoulli moments with
// per-row success probabilities q_nk, r_nk = sum_{j>k} q_nj and
// s_nk = q_nk + r_nk.
struct CountMoments {
  Eigen::ArrayXd e, v;        // N_k
  Eigen::ArrayXd e_gt, v_gt;  // N_{>k}
  Eigen::ArrayXd e_ge, v_ge;  // N_{>=k}
  double n_total = 0.0;

  Index k() const { return e.size(); }

  void resize(Index K) {
    e.setZero(K); v.setZero(K);
    e_gt.setZero(K); v_gt.setZero(K);
    e_ge.setZero(K); v_ge.setZero(K);
  }

  template <typename Row>
  void add_row(const Row& row) {
    const Index K = k();
    double tail = 0.0;
    for (Index j = K - 1; j >= 0; --j) {
      const double p = row(j);
      const double r = tail;      // P(z > j)
      const double s = p + tail;  // P(z >= j)
      e(j) += p;      v(j) += p * (1.0 - p);
      e_gt(j) += r;   v_gt(j) += r * (1.0 - r);
      e_ge(j) += s;   v_ge(j) += s * (1.0 - s);
      tail = s;
    }
    n_total += 1.0;
  }

  template <typename Row>
  void subtract_row(const Row& row) {
    const Index K = k();
    double tail = 0.0;
    for (Index j = K - 1; j >= 0; --j) {
      const double p = row(j);
      const double r = tail;
      const double s = p + tail;
      e(j) = clamp0(e(j) - p);           v(j) = clamp0(v(j) - p * (1.0 - p));
      e_gt(j) = clamp0(e_gt(j) - r);     v_gt(j) = clamp0(v_gt(j) - r * (1.0 - r));
      e_ge(j) = clamp0(e_ge(j) - s);     v_ge(j) = clamp0(v_ge(j) - s * (1.0 - s));
      tail = s;
    }
    n_total -= 1.0;
  }

private:
  // Incremental subtraction may leave -1e-17 style residue; counts are
  // nonnegative by definition.
  static double clamp0(double x) { return x < 0.0 ? 0.0 : x; }
};

inline CountMoments count_moments(const Responsibilities& q) {
  CountMoments m;
  m.resize(q.k());
  for (Index i = 0; i < q.n(); ++i) m.add_row(q.q.row(i));
  return m;
}

// Moments with row n removed, O(K) given the cached full-data moments.
inline CountMoments leave_one_out(const CountMoments& m, const Responsibilities& q,
                                  Index n) {
  if (n < 0 || n >= q.n())
    throw IndexOutOfRange("row " + std::to_string(n) + " of " + std::to_string(q.n()));
  CountMoments out = m;
  out.subtract_row(q.q.row(n));
  return out;
}

}  // namespace dpmix
