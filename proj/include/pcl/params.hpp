#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace pcl {

// A named parameter matrix with its gradient accumulator. Vectors are stored
// as n x 1 matrices.
struct Tensor {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;

  Tensor(std::string n, Eigen::MatrixXd v)
      : name(std::move(n)), value(std::move(v)), grad(Eigen::MatrixXd::Zero(value.rows(), value.cols())) {}
};

// Flat, ordered collection of a model's trainable tensors. Order is the
// checkpoint serialization order, so it must be construction-deterministic.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, Eigen::MatrixXd value);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;

  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  void zero_grad();
  long count_parameters() const;  // total trainable scalar count

 private:
  std::vector<Tensor> tensors_;
};

}  // namespace pcl
