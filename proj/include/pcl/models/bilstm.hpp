#pragma once

#include <random>
#include <vector>

#include "pcl/embedding.hpp"
#include "pcl/models/common.hpp"
#include "pcl/text_prep.hpp"

namespace pcl {

struct BilstmConfig {
  int hidden_size = 256;
  double dropout_rate = 0.0;
  int max_len = 256;

  void validate() const;
};

// Bidirectional LSTM: embed tokens, run a forward and a backward recurrence
// over the unpadded positions only, concatenate the two final hidden states,
// affine map to 2 logits, softmax. PAD positions never enter the recurrence.
class BilstmModel final : public Classifier {
 public:
  BilstmModel(BilstmConfig config, const Vocabulary& vocab, const EmbeddingTable& embeddings,
              std::uint64_t seed);

  std::string family() const override { return "bilstm"; }
  ParameterStore& params() override { return params_; }
  const BilstmConfig& config() const { return config_; }

  std::unique_ptr<EncodedData> encode_records(
      std::span<const ParagraphRecord> records) const override;
  Eigen::MatrixXd forward(const EncodedData& data, std::span<const int> index,
                          Mode mode) override;
  double forward_backward(const EncodedData& data, std::span<const int> index,
                          std::span<const int> labels) override;

  std::unique_ptr<EncodedData> encode_rows(const std::vector<std::vector<int>>& id_rows,
                                           const std::vector<int>& lengths) const;

 private:
  BilstmConfig config_;
  Vocabulary vocab_;
  int dim_;
  ParameterStore params_;
  std::mt19937_64 dropout_rng_;

  struct Cache;
  Eigen::MatrixXd run(const EncodedData& data, std::span<const int> index, Mode mode,
                      Cache* cache);
};

}  // namespace pcl
