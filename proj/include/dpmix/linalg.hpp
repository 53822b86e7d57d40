#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "dpmix/error.hpp"

namespace dpmix {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Observations are accessed row-wise throughout; keep them contiguous per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

// Dense symmetric matrix. Writes go through set() which mirrors the entry;
// construction from a dense matrix symmetrizes from the lower triangle.
class SymMatrix {
public:
  SymMatrix() = default;
  explicit SymMatrix(Index dim) : m_(Matrix::Zero(dim, dim)) {}
  explicit SymMatrix(const Matrix& m)
      : m_(m.template selfadjointView<Eigen::Lower>()) {
    if (m.rows() != m.cols())
      throw DomainError("SymMatrix requires a square matrix");
  }
  static SymMatrix identity(Index dim) { return SymMatrix(Matrix::Identity(dim, dim)); }

  Index dim() const { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }
  void set(Index i, Index j, double v) { m_(i, j) = v; m_(j, i) = v; }
  const Matrix& dense() const { return m_; }

private:
  Matrix m_;
};

class CholeskyFactor {
public:
  explicit CholeskyFactor(Matrix lower) : lower_(std::move(lower)) {}

  Index dim() const { return lower_.rows(); }
  const Matrix& lower() const { return lower_; }
  Matrix reconstruct() const { return lower_ * lower_.transpose(); }

  double log_det() const {  // of L L^T
    return 2.0 * lower_.diagonal().array().log().sum();
  }
  // Solve (L L^T) x = b.
  Vector solve(const Vector& b) const {
    Vector y = lower_.template triangularView<Eigen::Lower>().solve(b);
    return lower_.transpose().template triangularView<Eigen::Upper>().solve(y);
  }
  Matrix inverse() const {
    Matrix inv = Matrix::Identity(dim(), dim());
    lower_.template triangularView<Eigen::Lower>().solveInPlace(inv);
    return inv.transpose() * inv;  // L^-T L^-1
  }

private:
  Matrix lower_;
};

// Lower Cholesky with a relative pivot test: a pivot <= 1e-12 * max diagonal
// of the input is treated as numerically indefinite.
inline CholeskyFactor cholesky(const SymMatrix& m) {
  const Index n = m.dim();
  if (n < 1) throw DomainError("cholesky requires dim >= 1");
  const Matrix& a = m.dense();
  const double tol = 1e-12 * a.diagonal().maxCoeff();
  Matrix lower = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double pivot = a(j, j) - lower.row(j).head(j).squaredNorm();
    if (!(pivot > tol))
      throw NotPositiveDefinite("pivot " + std::to_string(pivot) +
                                " at index " + std::to_string(j));
    const double ljj = std::sqrt(pivot);
    lower(j, j) = ljj;
    if (j + 1 < n) {
      auto tail = lower.block(j + 1, 0, n - j - 1, j);
      lower.col(j).tail(n - j - 1) =
          (a.col(j).tail(n - j - 1) - tail * lower.row(j).head(j).transpose()) / ljj;
    }
  }
  return CholeskyFactor(std::move(lower));
}

inline double log_det_pd(const SymMatrix& m) { return cholesky(m).log_det(); }

inline Matrix inverse_pd(const SymMatrix& m) { return cholesky(m).inverse(); }

// log sum_i exp(v_i), guarded by max subtraction. Throws if the result is
// still non-finite (corrupt input state).
inline double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) throw NumericalOverflow("non-finite log-score");
  const double s = (v.array() - m).exp().sum();
  const double out = m + std::log(s);
  if (!std::isfinite(out)) throw NumericalOverflow("log-sum-exp overflow");
  return out;
}

}  // namespace dpmix
