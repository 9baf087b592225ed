#include "pcl/models/subword.hpp"

#include <algorithm>
#include <map>

#include "pcl/errors.hpp"
#include "pcl/text_prep.hpp"

namespace pcl {

SubwordTokenizer::SubwordTokenizer(std::vector<std::string> vocab) : vocab_(std::move(vocab)) {
  if (vocab_.size() < 4 || vocab_[kPad] != "<pad>" || vocab_[kUnk] != "<unk>" ||
      vocab_[kCls] != "<s>" || vocab_[kSep] != "</s>")
    throw FormatError("subword vocabulary must start with <pad> <unk> <s> </s>");
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<int>(i)).second)
      throw FormatError("duplicate subword piece: " + vocab_[i]);
  }
}

bool SubwordTokenizer::segment_word(const std::string& word, std::vector<int>& out) const {
  std::size_t start = 0;
  std::vector<int> pieces;
  while (start < word.size()) {
    std::size_t end = word.size();
    int match = -1;
    while (end > start) {
      std::string candidate =
          (start == 0 ? "" : "##") + word.substr(start, end - start);
      auto it = index_.find(candidate);
      if (it != index_.end()) {
        match = it->second;
        break;
      }
      --end;
    }
    if (match < 0) return false;
    pieces.push_back(match);
    start = end;
  }
  out.insert(out.end(), pieces.begin(), pieces.end());
  return true;
}

std::vector<int> SubwordTokenizer::encode(const std::string& text, int max_tokens,
                                          bool* truncated) const {
  if (max_tokens < 2) throw ValidationError("max_tokens must be >= 2");
  std::vector<int> body;
  for (const auto& word : tokenize(text)) {
    if (!segment_word(word, body)) body.push_back(kUnk);
  }
  bool cut = static_cast<int>(body.size()) > max_tokens - 2;
  if (cut) body.resize(static_cast<std::size_t>(max_tokens - 2));
  if (truncated) *truncated = cut;

  std::vector<int> ids;
  ids.reserve(body.size() + 2);
  ids.push_back(kCls);
  ids.insert(ids.end(), body.begin(), body.end());
  ids.push_back(kSep);
  return ids;
}

std::vector<std::string> SubwordTokenizer::build_vocab(const std::vector<std::string>& texts,
                                                       int max_whole_words) {
  std::map<std::string, long> chars;
  std::map<std::string, long> words;
  for (const auto& text : texts) {
    for (const auto& word : tokenize(text)) {
      ++words[word];
      // Characters, kept multi-byte-safe by grouping UTF-8 continuations.
      std::size_t i = 0;
      while (i < word.size()) {
        std::size_t n = 1;
        const auto c = static_cast<unsigned char>(word[i]);
        if (c >= 0xF0)
          n = 4;
        else if (c >= 0xE0)
          n = 3;
        else if (c >= 0xC0)
          n = 2;
        n = std::min(n, word.size() - i);
        ++chars[word.substr(i, n)];
        i += n;
      }
    }
  }

  std::vector<std::string> vocab = {"<pad>", "<unk>", "<s>", "</s>"};
  for (const auto& [ch, n] : chars) vocab.push_back(ch);
  for (const auto& [ch, n] : chars) vocab.push_back("##" + ch);

  std::vector<std::pair<long, std::string>> by_freq;  // (-freq, word)
  for (const auto& [word, n] : words)
    if (word.size() > 1) by_freq.push_back({-n, word});
  std::sort(by_freq.begin(), by_freq.end());
  for (std::size_t i = 0; i < by_freq.size() && static_cast<int>(i) < max_whole_words; ++i)
    vocab.push_back(by_freq[i].second);

  // Whole words may duplicate single chars already present; drop repeats.
  std::vector<std::string> unique;
  std::unordered_map<std::string, bool> seen;
  for (auto& piece : vocab)
    if (!seen[piece]) {
      seen[piece] = true;
      unique.push_back(piece);
    }
  return unique;
}

}  // namespace pcl
