#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pcl/params.hpp"

namespace pcl {

// Adam (Kingma & Ba) over a ParameterStore. The learning rate is passed per
// step so the epoch schedule stays outside the optimizer.
class Adam {
 public:
  explicit Adam(const ParameterStore& params, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);

  void step(ParameterStore& params, double lr);

 private:
  double beta1_;
  double beta2_;
  double epsilon_;
  long t_ = 0;
  std::vector<Eigen::MatrixXd> m_;
  std::vector<Eigen::MatrixXd> v_;
};

// base_lr * gamma^floor((epoch - 1) / step_size); epoch counts from 1.
double stepwise_lr(int epoch, double base_lr, int step_size, double gamma);

}  // namespace pcl
