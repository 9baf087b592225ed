#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace pcl {

// Greedy longest-match subword tokenizer bundled with an encoder archive.
// Words come from the shared word/punctuation splitter; pieces inside a word
// carry the "##" continuation prefix. A word with no viable segmentation maps
// to a single <unk>.
class SubwordTokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;  // "<s>"
  static constexpr int kSep = 3;  // "</s>"

  explicit SubwordTokenizer(std::vector<std::string> vocab);

  // <s> pieces... </s>, truncated to max_tokens (the closing </s> is kept).
  // Sets *truncated when the text did not fit.
  std::vector<int> encode(const std::string& text, int max_tokens,
                          bool* truncated = nullptr) const;

  int vocab_size() const { return static_cast<int>(vocab_.size()); }
  const std::vector<std::string>& vocab() const { return vocab_; }

  // Deterministic vocabulary for a miniature encoder: specials, then every
  // character seen in the texts (plus its "##" continuation form), then the
  // most frequent whole words.
  static std::vector<std::string> build_vocab(const std::vector<std::string>& texts,
                                              int max_whole_words);

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;

  bool segment_word(const std::string& word, std::vector<int>& out) const;
};

}  // namespace pcl
