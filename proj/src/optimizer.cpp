#include "pcl/optimizer.hpp"

#include <cmath>

#include "pcl/errors.hpp"

namespace pcl {

Adam::Adam(const ParameterStore& params, double beta1, double beta2, double epsilon)
    : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (const auto& t : params.tensors()) {
    m_.push_back(Eigen::MatrixXd::Zero(t.value.rows(), t.value.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(t.value.rows(), t.value.cols()));
  }
}

void Adam::step(ParameterStore& params, double lr) {
  if (params.tensors().size() != m_.size())
    throw ConfigError("optimizer state does not match parameter store");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    auto& tensor = params.tensors()[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * tensor.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * tensor.grad.cwiseProduct(tensor.grad);
    tensor.value.array() -=
        lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + epsilon_);
  }
}

double stepwise_lr(int epoch, double base_lr, int step_size, double gamma) {
  if (epoch < 1) throw ValidationError("epoch counts from 1");
  if (step_size < 1) throw ValidationError("step_size must be >= 1");
  if (gamma <= 0 || gamma > 1) throw ValidationError("gamma must be in (0, 1]");
  return base_lr * std::pow(gamma, static_cast<double>((epoch - 1) / step_size));
}

}  // namespace pcl
