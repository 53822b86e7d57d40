#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "dpmix/linalg.hpp"

namespace dpmix {

// Immutable N x d observation matrix plus optional true labels.
class DataMatrix {
public:
  DataMatrix() = default;
  explicit DataMatrix(RowMatrix x, std::optional<std::vector<int>> labels = {})
      : x_(std::move(x)), labels_(std::move(labels)) {
    if (labels_ && static_cast<Index>(labels_->size()) != x_.rows())
      throw DomainError("label vector length does not match row count");
  }

  Index n() const { return x_.rows(); }
  Index d() const { return x_.cols(); }
  const RowMatrix& x() const { return x_; }
  auto row(Index i) const { return x_.row(i); }
  bool has_labels() const { return labels_.has_value(); }
  const std::vector<int>& labels() const { return *labels_; }

  // Feature-wise z-scoring; constant features are centered only.
  DataMatrix standardized() const {
    RowMatrix z = x_;
    for (Index j = 0; j < z.cols(); ++j) {
      const double mean = z.col(j).mean();
      z.col(j).array() -= mean;
      const double sd = std::sqrt(z.col(j).squaredNorm() / z.rows());
      if (sd > 0.0) z.col(j) /= sd;
    }
    return DataMatrix(std::move(z), labels_);
  }

private:
  RowMatrix x_;
  std::optional<std::vector<int>> labels_;
};

}  // namespace dpmix
