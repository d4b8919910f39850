#pragma once

#include "corrvae/linalg.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace corrvae {

/// Symmetric, unit-diagonal, positive semidefinite matrix of asset
/// correlations with one label per row.
class CorrelationMatrix {
 public:
  CorrelationMatrix() = default;

  /// Validates the invariants; throws NumericalError when they fail.
  CorrelationMatrix(std::vector<std::string> labels, Eigen::MatrixXd values);

  /// Repairs an arbitrary finite square matrix into a valid correlation matrix.
  static CorrelationMatrix repaired(std::vector<std::string> labels, const Eigen::MatrixXd& raw);

  /// Skips validation; the caller guarantees a valid matrix.
  static CorrelationMatrix unchecked(std::vector<std::string> labels, Eigen::MatrixXd values);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index dim() const noexcept { return values_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values_(i, j); }

 private:
  std::vector<std::string> labels_;
  Eigen::MatrixXd values_;
};

/// Default labels A0, A1, ... for m assets.
std::vector<std::string> default_labels(Eigen::Index m);

}  // namespace corrvae
