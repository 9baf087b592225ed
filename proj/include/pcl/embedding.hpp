#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <random>
#include <string>

#include "pcl/text_prep.hpp"

namespace pcl {

enum class EmbeddingFormat { TextVec, Word2VecBinary };

EmbeddingFormat embedding_format_from_name(const std::string& name);
std::string to_string(EmbeddingFormat format);

// V x d lookup table aligned to a Vocabulary. Rows for tokens found in the
// pretrained file are copied; the PAD row is zero; every other row is sampled
// uniformly from [-0.25, 0.25] with the supplied generator.
struct EmbeddingTable {
  Eigen::MatrixXd matrix;  // V x d
  int dimension = 0;
  long found = 0;     // vocabulary tokens present in the file
  double coverage = 0;  // found / (V - 2); PAD and UNK can never be found

  static EmbeddingTable load(const std::filesystem::path& path, EmbeddingFormat format,
                             const Vocabulary& vocab, std::mt19937_64& oov_rng);

  // Random table for runs without a pretrained file (dimension required).
  static EmbeddingTable random(int dimension, const Vocabulary& vocab, std::mt19937_64& oov_rng);
};

// Fixture helpers, also used to materialize tiny embedding files in tests.
std::string write_text_vec(const std::vector<std::pair<std::string, std::vector<float>>>& entries,
                           bool with_header);
std::string write_word2vec_binary(
    const std::vector<std::pair<std::string, std::vector<float>>>& entries);

}  // namespace pcl
