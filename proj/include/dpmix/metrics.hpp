#pragma once

#include <unordered_map>
#include <vector>

#include "dpmix/error.hpp"

namespace dpmix {

namespace detail {
inline std::vector<int> dense_codes(const std::vector<int>& labels, int& count) {
  std::unordered_map<int, int> code;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = code.try_emplace(labels[i], static_cast<int>(code.size()));
    (void)fresh;
    out[i] = it->second;
  }
  count = static_cast<int>(code.size());
  return out;
}
inline double comb2(double n) { return 0.5 * n * (n - 1.0); }
}  // namespace detail

// Pair-counting adjusted Rand index from the contingency table.
inline double ari(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size())
    throw Error("LengthMismatch", "partitions have different lengths");
  if (labels_a.size() < 2)
    throw Error("LengthMismatch", "need at least 2 observations");
  int ra = 0, rb = 0;
  const std::vector<int> a = detail::dense_codes(labels_a, ra);
  const std::vector<int> b = detail::dense_codes(labels_b, rb);
  std::vector<double> table(static_cast<std::size_t>(ra) * rb, 0.0);
  std::vector<double> rows(ra, 0.0), cols(rb, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[static_cast<std::size_t>(a[i]) * rb + b[i]] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0;
  for (double c : table) index += detail::comb2(c);
  double sum_a = 0.0, sum_b = 0.0;
  for (double c : rows) sum_a += detail::comb2(c);
  for (double c : cols) sum_b += detail::comb2(c);
  const double total = detail::comb2(static_cast<double>(a.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected)  // both partitions degenerate
    return index == expected ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

inline int k_post(const std::vector<int>& assignments) {
  if (assignments.empty()) throw DomainError("empty assignment vector");
  int n = 0;
  detail::dense_codes(assignments, n);
  return n;
}

}  // namespace dpmix
