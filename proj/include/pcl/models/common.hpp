#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>

#include "pcl/corpus.hpp"
#include "pcl/params.hpp"

namespace pcl {

enum class Mode { Train, Eval };

// Model-ready encoded form of a record list; concrete type depends on the
// family (index matrices for CNN/BiLSTM, subword id sequences for the
// transformer).
class EncodedData {
 public:
  virtual ~EncodedData() = default;
  virtual std::size_t size() const = 0;
};

// A binary paragraph classifier. forward returns B x 2 class probabilities
// (rows sum to 1); forward_backward additionally accumulates cross-entropy
// gradients into the parameter store and returns the mean batch loss.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string family() const = 0;
  virtual ParameterStore& params() = 0;
  const ParameterStore& params() const { return const_cast<Classifier*>(this)->params(); }

  virtual std::unique_ptr<EncodedData> encode_records(
      std::span<const ParagraphRecord> records) const = 0;

  virtual Eigen::MatrixXd forward(const EncodedData& data, std::span<const int> index,
                                  Mode mode) = 0;
  virtual double forward_backward(const EncodedData& data, std::span<const int> index,
                                  std::span<const int> labels) = 0;
};

// Numerically stable row softmax.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

// Mean cross-entropy of the true-class probabilities.
double cross_entropy(const Eigen::MatrixXd& probs, std::span<const int> labels);

// d(mean CE)/d(logits) = (probs - onehot) / B.
Eigen::MatrixXd cross_entropy_logit_grad(const Eigen::MatrixXd& probs,
                                         std::span<const int> labels);

}  // namespace pcl
