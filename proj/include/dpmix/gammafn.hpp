#pragma once

#include <cmath>

#include "dpmix/error.hpp"

// Gamma-family special functions on x > 0: recurrence shift above a cutoff,
// then the asymptotic (Bernoulli-number) series. Self-contained so the
// numerical core carries no special-function dependency.

namespace dpmix {

inline double digamma(double x) {
  if (!(x > 0.0)) throw DomainError("digamma requires x > 0");
  double acc = 0.0;
  while (x < 10.0) {  // psi(x) = psi(x+1) - 1/x
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // log x - 1/(2x) - sum B_2n / (2n x^2n)
  double series = inv2 * (1.0 / 12.0 -
                  inv2 * (1.0 / 120.0 -
                  inv2 * (1.0 / 252.0 -
                  inv2 * (1.0 / 240.0 -
                  inv2 * (1.0 / 132.0 -
                  inv2 * (691.0 / 32760.0))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

inline double trigamma(double x) {
  if (!(x > 0.0)) throw DomainError("trigamma requires x > 0");
  double acc = 0.0;
  while (x < 10.0) {  // psi1(x) = psi1(x+1) + 1/x^2
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // 1/x + 1/(2x^2) + sum B_2n / x^(2n+1)
  double series = inv * (1.0 +
                  inv * (0.5 +
                  inv * (1.0 / 6.0 -
                  inv2 * (1.0 / 30.0 -
                  inv2 * (1.0 / 42.0 -
                  inv2 * (1.0 / 30.0 -
                  inv2 * (5.0 / 66.0)))))));
  return acc + series;
}

inline double log_gamma(double x) {
  if (!(x > 0.0)) throw DomainError("log_gamma requires x > 0");
  double acc = 0.0;
  while (x < 10.0) {  // lgamma(x) = lgamma(x+1) - log x
    acc -= std::log(x);
    x += 1.0;
  }
  constexpr double half_log_two_pi = 0.91893853320467274178;
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = inv * (1.0 / 12.0 -
                  inv2 * (1.0 / 360.0 -
                  inv2 * (1.0 / 1260.0 -
                  inv2 * (1.0 / 1680.0 -
                  inv2 * (1.0 / 1188.0)))));
  return acc + (x - 0.5) * std::log(x) - x + half_log_two_pi + series;
}

// Multivariate log-gamma, needed by inverse-Wishart normalizers.
inline double log_multigamma(int d, double x) {
  constexpr double log_pi = 1.1447298858494001741;
  double out = 0.25 * d * (d - 1) * log_pi;
  for (int i = 0; i < d; ++i) out += log_gamma(x - 0.5 * i);
  return out;
}

}  // namespace dpmix
