#include "pcl/text_prep.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "pcl/errors.hpp"
#include "pcl/io_util.hpp"

namespace pcl {

namespace {

inline bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

inline bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
      continue;
    }
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
    if (!is_space_byte(c)) tokens.push_back(std::string(1, static_cast<char>(c)));
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary::Vocabulary() {
  tokens_ = {kPadToken, kUnkToken};
  index_ = {{kPadToken, kPad}, {kUnkToken, kUnk}};
}

Vocabulary Vocabulary::build(std::span<const ParagraphRecord> train_records, int min_freq) {
  std::map<std::string, long> freq;
  for (const auto& rec : train_records)
    for (auto& tok : tokenize(rec.text)) ++freq[tok];

  std::vector<std::pair<long, std::string>> order;  // (-freq, token)
  for (auto& [tok, n] : freq)
    if (n >= min_freq) order.push_back({-n, tok});
  std::sort(order.begin(), order.end());

  Vocabulary v;
  v.tokens_.reserve(order.size() + 2);
  for (auto& [neg, tok] : order) {
    v.index_.emplace(tok, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(tok);
  }
  return v;
}

int Vocabulary::index_or_unk(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::uint64_t Vocabulary::hash() const {
  std::string joined;
  for (const auto& t : tokens_) {
    joined += t;
    joined.push_back('\n');
  }
  return fnv1a64(joined);
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const auto& t : tokens_) {
    out += t;
    out.push_back('\n');
  }
  return out;
}

Vocabulary Vocabulary::from_text(const std::string& text) {
  Vocabulary v;
  v.tokens_.clear();
  v.index_.clear();
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto [it, inserted] = v.index_.emplace(line, static_cast<int>(v.tokens_.size()));
    if (!inserted) throw FormatError("duplicate token in vocabulary file: " + line);
    v.tokens_.push_back(line);
  }
  if (v.size() < 2 || v.tokens_[0] != kPadToken || v.tokens_[1] != kUnkToken)
    throw FormatError("vocabulary file must start with <pad> and <unk>");
  return v;
}

std::vector<int> encode(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                        int max_len) {
  if (max_len < 1) throw ValidationError("max_len must be >= 1");
  std::vector<int> ids(static_cast<std::size_t>(max_len), Vocabulary::kPad);
  const std::size_t n = std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(max_len));
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.index_or_unk(tokens[i]);
  return ids;
}

}  // namespace pcl
