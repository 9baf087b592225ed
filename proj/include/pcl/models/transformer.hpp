#pragma once

#include <filesystem>
#include <random>

#include "pcl/models/common.hpp"
#include "pcl/models/subword.hpp"

namespace pcl {

struct TransformerConfig {
  std::string encoder_id = "roberta-base";
  int max_tokens = 512;  // runtime truncation limit, clamped to max_positions
  // Architecture, fixed by the encoder archive.
  int dim = 0;
  int heads = 0;
  int layers = 0;
  int ff_dim = 0;
  int max_positions = 0;
  int vocab_size = 0;

  void validate() const;
  int effective_max_tokens() const;
};

// Bidirectional transformer encoder with a classification head: token +
// position embeddings, post-LN self-attention blocks with GELU FFNs, then an
// affine map from the final layer's CLS vector to 2 logits and a softmax.
// Encoder weights normally come from a pretrained archive; the head is
// initialized from the run seed at fine-tuning time.
class TransformerModel final : public Classifier {
 public:
  // Fresh randomly initialized encoder + head (miniature encoders, tests).
  TransformerModel(TransformerConfig config, SubwordTokenizer tokenizer, std::uint64_t seed);

  // Pretrained encoder weights + tokenizer from an archive, fresh head.
  static std::unique_ptr<TransformerModel> from_encoder_archive(
      const std::filesystem::path& path, int max_tokens, std::uint64_t seed);

  // Writes this model's encoder weights (no head) plus tokenizer vocabulary.
  void save_encoder_archive(const std::filesystem::path& path) const;

  std::string family() const override { return "transformer"; }
  ParameterStore& params() override { return params_; }
  const TransformerConfig& config() const { return config_; }
  const SubwordTokenizer& tokenizer() const { return tokenizer_; }

  std::unique_ptr<EncodedData> encode_records(
      std::span<const ParagraphRecord> records) const override;
  Eigen::MatrixXd forward(const EncodedData& data, std::span<const int> index,
                          Mode mode) override;
  double forward_backward(const EncodedData& data, std::span<const int> index,
                          std::span<const int> labels) override;

  std::unique_ptr<EncodedData> encode_texts(const std::vector<std::string>& texts,
                                            std::size_t* truncated_count = nullptr) const;

 private:
  TransformerConfig config_;
  SubwordTokenizer tokenizer_;
  ParameterStore params_;

  struct Trace;
  Eigen::Vector2d forward_one(const std::vector<int>& ids, Trace* trace);
  void backward_one(const std::vector<int>& ids, const Trace& trace,
                    const Eigen::Vector2d& dlogits);
  void init_head(std::uint64_t seed);
};

// Convenience used by `make-encoder` and tests: builds a miniature encoder
// whose subword vocabulary is harvested from the given texts.
void write_miniature_encoder(const std::filesystem::path& path, const std::string& encoder_id,
                             const std::vector<std::string>& vocab_texts, int dim, int heads,
                             int layers, int ff_dim, int max_positions, int max_whole_words,
                             std::uint64_t seed);

}  // namespace pcl
