#include "corrvae/correlation.hpp"

namespace corrvae {

CorrelationMatrix::CorrelationMatrix(std::vector<std::string> labels, Eigen::MatrixXd values)
    : labels_(std::move(labels)), values_(std::move(values)) {
  if (static_cast<Eigen::Index>(labels_.size()) != values_.rows())
    throw DataError("correlation", "label count does not match matrix dimension");
  if (auto violation = correlation_violation(values_))
    throw NumericalError("correlation", "invalid correlation matrix: " + *violation);
}

CorrelationMatrix CorrelationMatrix::repaired(std::vector<std::string> labels,
                                              const Eigen::MatrixXd& raw) {
  return unchecked(std::move(labels), repair_to_correlation(raw));
}

CorrelationMatrix CorrelationMatrix::unchecked(std::vector<std::string> labels,
                                               Eigen::MatrixXd values) {
  if (static_cast<Eigen::Index>(labels.size()) != values.rows())
    throw DataError("correlation", "label count does not match matrix dimension");
  CorrelationMatrix out;
  out.labels_ = std::move(labels);
  out.values_ = std::move(values);
  return out;
}

std::vector<std::string> default_labels(Eigen::Index m) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) labels.push_back("A" + std::to_string(i));
  return labels;
}

}  // namespace corrvae
