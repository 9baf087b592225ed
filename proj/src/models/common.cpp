#include "pcl/models/common.hpp"

#include <cmath>

#include "pcl/errors.hpp"

namespace pcl {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const Eigen::ArrayXd e = (logits.row(i).transpose().array() - m).exp();
    out.row(i) = (e / e.sum()).matrix().transpose();
  }
  return out;
}

double cross_entropy(const Eigen::MatrixXd& probs, std::span<const int> labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size())
    throw AlignmentError("probability rows do not match label count");
  double total = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double p = probs(i, labels[static_cast<std::size_t>(i)]);
    total += -std::log(std::max(p, 1e-300));
  }
  return total / static_cast<double>(probs.rows());
}

Eigen::MatrixXd cross_entropy_logit_grad(const Eigen::MatrixXd& probs,
                                         std::span<const int> labels) {
  Eigen::MatrixXd g = probs;
  const double inv_b = 1.0 / static_cast<double>(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i)
    g(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  return g * inv_b;
}

}  // namespace pcl
