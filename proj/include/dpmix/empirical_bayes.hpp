#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dpmix/data.hpp"
#include "dpmix/engine.hpp"
#include "dpmix/gammafn.hpp"
#include "dpmix/moments.hpp"

// Data-driven choice of the diagonal precision prior a0 = b0 (VLL derivative
// analysis on random allocations) and the k0 = N + 1 rule.

namespace dpmix {

struct SensitivityProfile {
  std::vector<double> grid;        // ascending candidate a0 values
  std::vector<double> derivative;  // median dVLL/da0 across draws
  int draws = 0;
};

namespace detail {

// Per-draw sufficient statistics: cluster masses and weighted feature
// moments of one random allocation q°.
struct DrawStats {
  Eigen::ArrayXd mass;  // K
  RowMatrix sumsq;      // K x d: sum_n q_nk x_ni^2
  RowMatrix sum;        // K x d: sum_n q_nk x_ni
};

inline DrawStats draw_stats(const DataMatrix& X, const Responsibilities& q) {
  DrawStats s;
  s.mass = q.q.colwise().sum().array();
  s.sumsq = q.q.transpose() * X.x().array().square().matrix();
  s.sum = q.q.transpose() * X.x();
  return s;
}

inline double deriv_a0(const DrawStats& s, double a0, Index d) {
  double total = 0.0;
  for (Index k = 0; k < s.mass.size(); ++k) {
    const double m = s.mass(k);
    const auto B = 0.5 * s.sumsq.row(k).array();
    const double inner =
        ((a0 * m + B.square() - m * B) / (a0 + B).square()).sum();
    total += d * m * trigamma(a0 + m) - inner;
  }
  return 0.5 * total;
}

inline double deriv_k0(const DrawStats& s, double k0, Index d) {
  double total = 0.0;
  for (Index k = 0; k < s.mass.size(); ++k) {
    const double m = s.mass(k);
    const double r2 = s.sum.row(k).squaredNorm();
    total += (d * m - (2.0 - m) * r2) / detail::sq(k0 + m);
  }
  return total;
}

inline double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.begin() + n / 2);
  return 0.5 * (v[n / 2 - 1] + hi);
}

}  // namespace detail

// dVLL/da0 at a random allocation q°, a0 = b0 threaded jointly.
inline double vll_derivative_a0(const DataMatrix& X, const Responsibilities& q0,
                                double a0) {
  if (!(a0 > 0.0)) throw DomainError("a0 must be > 0");
  return detail::deriv_a0(detail::draw_stats(X, q0), a0, X.d());
}

// dVLL/dk0 at a random allocation q°.
inline double vll_derivative_k0(const DataMatrix& X, const Responsibilities& q0,
                                double k0) {
  if (!(k0 > 0.0)) throw DomainError("k0 must be > 0");
  return detail::deriv_k0(detail::draw_stats(X, q0), k0, X.d());
}

struct A0Estimate {
  double a0 = 0.0;
  SensitivityProfile profile;
};

// Median derivative curve over `draws` random flat-Dirichlet allocations on
// a 60-point log grid spanning [1e-3, 1e6]; the estimate is the bisection
// root when the median curve changes sign, otherwise the maximum-curvature
// (knee) point by discrete second differences in log-a0.
inline A0Estimate estimate_a0_detailed(const DataMatrix& X, int draws,
                                       std::uint64_t seed) {
  if (draws < 1) throw DomainError("draws must be >= 1");
  constexpr int kGridSize = 60;
  constexpr double kLo = 1e-3, kHi = 1e6;
  const Index K = std::min<Index>(X.n(), 25);
  const Index d = X.d();

  std::vector<detail::DrawStats> stats;
  stats.reserve(draws);
  for (int r = 0; r < draws; ++r)
    stats.push_back(
        detail::draw_stats(X, init_responsibilities(X.n(), K, seed + r)));

  A0Estimate out;
  out.profile.draws = draws;
  out.profile.grid.resize(kGridSize);
  out.profile.derivative.resize(kGridSize);
  const double step = (std::log(kHi) - std::log(kLo)) / (kGridSize - 1);
  std::vector<double> values(draws);
  auto median_deriv = [&](double a0) {
    for (int r = 0; r < draws; ++r) values[r] = detail::deriv_a0(stats[r], a0, d);
    return detail::median_of(values);
  };
  for (int g = 0; g < kGridSize; ++g) {
    out.profile.grid[g] = std::exp(std::log(kLo) + g * step);
    out.profile.derivative[g] = median_deriv(out.profile.grid[g]);
  }

  bool all_zero = true;
  for (double v : out.profile.derivative)
    if (v != 0.0) { all_zero = false; break; }
  if (all_zero) throw NoEstimate("median derivative is identically zero");

  for (int g = 0; g + 1 < kGridSize; ++g) {
    const double lo_v = out.profile.derivative[g];
    const double hi_v = out.profile.derivative[g + 1];
    if (lo_v == 0.0) { out.a0 = out.profile.grid[g]; return out; }
    if (lo_v * hi_v < 0.0) {
      double lo = out.profile.grid[g], hi = out.profile.grid[g + 1];
      double flo = lo_v;
      while (hi - lo > 1e-6 * lo) {
        const double mid = std::sqrt(lo * hi);
        const double fmid = median_deriv(mid);
        if (fmid == 0.0) { lo = hi = mid; break; }
        if ((fmid < 0.0) == (flo < 0.0)) { lo = mid; flo = fmid; }
        else hi = mid;
      }
      out.a0 = 0.5 * (lo + hi);
      return out;
    }
  }

  int knee = 1;
  double best = -1.0;
  for (int g = 1; g + 1 < kGridSize; ++g) {
    const double curv = std::abs(out.profile.derivative[g + 1] -
                                 2.0 * out.profile.derivative[g] +
                                 out.profile.derivative[g - 1]);
    if (curv > best) { best = curv; knee = g; }
  }
  out.a0 = out.profile.grid[knee];
  return out;
}

inline double estimate_a0(const DataMatrix& X, int draws, std::uint64_t seed) {
  return estimate_a0_detailed(X, draws, seed).a0;
}

inline double choose_k0(int n) {
  if (n < 1) throw DomainError("need n >= 1");
  return n + 1.0;
}

}  // namespace dpmix
