#pragma once

#include <cstdint>
#include <vector>

#include "dpmix/data.hpp"
#include "dpmix/rng.hpp"

namespace dpmix {

enum class SimFamily { Gaussian, NegativeBinomial };

struct SimSpec {
  Index n = 100;
  Index d = 2;
  Index k_true = 2;
  SimFamily family = SimFamily::Gaussian;
  double separation = 6.0;  // Gaussian center radius
  double dispersion = 1.0;  // NB size parameter
  double nb_log_sd = 0.5;   // log-sd of the per-cluster NB mean draws
  std::uint64_t seed = 0;
};

struct LabeledData {
  DataMatrix x;
  std::vector<int> labels;  // 1..k_true, every label present
};

namespace detail {

// Uniform labels, then force any absent label so each appears at least once.
inline std::vector<int> draw_labels(Rng& rng, Index n, Index k_true) {
  std::vector<int> labels(n);
  for (Index i = 0; i < n; ++i) labels[i] = rng.uniform_int(1, static_cast<int>(k_true));
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<bool> seen(k_true + 1, false);
    for (int l : labels) seen[l] = true;
    for (int l = 1; l <= static_cast<int>(k_true); ++l)
      if (!seen[l]) {
        labels[l - 1] = l;
        changed = true;
      }
  }
  return labels;
}

}  // namespace detail

inline LabeledData simulate(const SimSpec& spec) {
  if (spec.n < 2 || spec.d < 1 || spec.k_true < 1 || spec.k_true > spec.n)
    throw DomainError("invalid simulation spec");
  Rng rng(spec.seed);
  std::vector<int> labels = detail::draw_labels(rng, spec.n, spec.k_true);
  RowMatrix x(spec.n, spec.d);

  if (spec.family == SimFamily::Gaussian) {
    std::vector<Vector> centers;
    centers.reserve(spec.k_true);
    for (Index k = 0; k < spec.k_true; ++k)
      centers.push_back(rng.sphere(spec.d, spec.separation));
    for (Index i = 0; i < spec.n; ++i)
      for (Index j = 0; j < spec.d; ++j)
        x(i, j) = centers[labels[i] - 1](j) + rng.normal();
    return LabeledData{DataMatrix(std::move(x), labels), labels};
  }

  // Negative Binomial: per-cluster per-feature means drawn log-normally
  // (log-mean 1, log-sd configurable, default 0.5), counts via the
  // Gamma-Poisson mixture, then feature-wise standardization so the
  // zero-mean prior applies.
  RowMatrix means(spec.k_true, spec.d);
  for (Index k = 0; k < spec.k_true; ++k)
    for (Index j = 0; j < spec.d; ++j)
      means(k, j) = std::exp(1.0 + spec.nb_log_sd * rng.normal());
  const double r = spec.dispersion;
  for (Index i = 0; i < spec.n; ++i)
    for (Index j = 0; j < spec.d; ++j) {
      const double mu = means(labels[i] - 1, j);
      const double lambda = rng.gamma(r, r / mu);
      x(i, j) = static_cast<double>(rng.poisson(lambda));
    }
  DataMatrix raw(std::move(x), labels);
  return LabeledData{raw.standardized(), labels};
}

}  // namespace dpmix
