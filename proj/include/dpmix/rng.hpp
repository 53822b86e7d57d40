#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dpmix/linalg.hpp"

namespace dpmix {

// Seeded RNG used by initialization and the simulators. One instance per
// fit/restart; never shared across threads.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return unit_(eng_); }            // [0, 1)
  double normal() { return normal_(eng_); }
  double exponential() { return -std::log1p(-unit_(eng_)); }
  double gamma(double shape, double rate) {
    std::gamma_distribution<double> g(shape, 1.0 / rate);
    return g(eng_);
  }
  long poisson(double mean) {
    std::poisson_distribution<long> p(mean);
    return p(eng_);
  }
  int uniform_int(int lo, int hi) {  // inclusive
    std::uniform_int_distribution<int> u(lo, hi);
    return u(eng_);
  }

  // Flat Dirichlet draw written into a row of length K.
  template <typename Row>
  void dirichlet_row(Row&& row) {
    double sum = 0.0;
    for (Index k = 0; k < row.size(); ++k) {
      double e = exponential();
      row(k) = e;
      sum += e;
    }
    row /= sum;
  }

  // Uniform direction scaled to `radius`.
  Vector sphere(Index d, double radius) {
    Vector v(d);
    double norm2 = 0.0;
    do {
      for (Index i = 0; i < d; ++i) v(i) = normal();
      norm2 = v.squaredNorm();
    } while (norm2 == 0.0);
    return v * (radius / std::sqrt(norm2));
  }

private:
  std::mt19937_64 eng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace dpmix
