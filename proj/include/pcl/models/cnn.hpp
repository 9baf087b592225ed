#pragma once

#include <random>
#include <vector>

#include "pcl/embedding.hpp"
#include "pcl/models/common.hpp"
#include "pcl/text_prep.hpp"

namespace pcl {

struct CnnConfig {
  std::vector<int> filter_widths = {2, 3, 4};
  int filters_per_width = 2;
  double dropout_rate = 0.5;
  int max_len = 256;

  void validate() const;
  int feature_count() const;  // widths x filters_per_width
};

// Sentence CNN: embed tokens, convolve each filter width over time (valid
// padding), ReLU, max-pool over time, concatenate the pooled scalars, dropout,
// affine map to 2 logits, softmax.
class CnnModel final : public Classifier {
 public:
  CnnModel(CnnConfig config, const Vocabulary& vocab, const EmbeddingTable& embeddings,
           std::uint64_t seed);

  std::string family() const override { return "cnn"; }
  ParameterStore& params() override { return params_; }
  const CnnConfig& config() const { return config_; }

  std::unique_ptr<EncodedData> encode_records(
      std::span<const ParagraphRecord> records) const override;
  Eigen::MatrixXd forward(const EncodedData& data, std::span<const int> index,
                          Mode mode) override;
  double forward_backward(const EncodedData& data, std::span<const int> index,
                          std::span<const int> labels) override;

  // Encoded rows for already-tokenized input, used by tests.
  std::unique_ptr<EncodedData> encode_rows(const std::vector<std::vector<int>>& id_rows) const;

 private:
  CnnConfig config_;
  Vocabulary vocab_;
  int dim_;
  ParameterStore params_;
  std::mt19937_64 dropout_rng_;

  struct Cache;
  Eigen::MatrixXd run(const EncodedData& data, std::span<const int> index, Mode mode,
                      Cache* cache);
};

}  // namespace pcl
