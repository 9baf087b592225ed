#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcl/corpus.hpp"

namespace pcl {

// Deterministic word/punctuation tokenizer for the CNN and BiLSTM inputs.
// Rule: lowercase (ASCII); runs of alphanumerics (and any byte >= 0x80, so
// multi-byte UTF-8 sequences stay inside words) form word tokens; every other
// non-space character is emitted as a single-character token.
std::vector<std::string> tokenize(const std::string& text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary();  // {PAD, UNK} only

  // Index order: PAD, UNK, then tokens by descending training frequency, ties
  // broken lexicographically.
  static Vocabulary build(std::span<const ParagraphRecord> train_records, int min_freq);

  int size() const { return static_cast<int>(tokens_.size()); }
  int index_or_unk(const std::string& token) const;
  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::uint64_t hash() const;  // FNV-1a over the newline-joined token list

  std::string to_text() const;  // one token per line, index order
  static Vocabulary from_text(const std::string& text);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Fixed-length index sequence: first max_len tokens, right-padded with PAD.
// Unknown tokens map to UNK.
std::vector<int> encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                        int max_len);

}  // namespace pcl
