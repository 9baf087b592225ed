#include "pcl/params.hpp"

#include "pcl/errors.hpp"

namespace pcl {

Tensor& ParameterStore::add(const std::string& name, Eigen::MatrixXd value) {
  if (has(name)) throw ConfigError("duplicate tensor name: " + name);
  tensors_.emplace_back(name, std::move(value));
  return tensors_.back();
}

Tensor& ParameterStore::get(const std::string& name) {
  for (auto& t : tensors_)
    if (t.name == name) return t;
  throw ConfigError("unknown tensor: " + name);
}

const Tensor& ParameterStore::get(const std::string& name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return t;
  throw ConfigError("unknown tensor: " + name);
}

bool ParameterStore::has(const std::string& name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return true;
  return false;
}

void ParameterStore::zero_grad() {
  for (auto& t : tensors_) t.grad.setZero();
}

long ParameterStore::count_parameters() const {
  long n = 0;
  for (const auto& t : tensors_) n += static_cast<long>(t.value.size());
  return n;
}

}  // namespace pcl
