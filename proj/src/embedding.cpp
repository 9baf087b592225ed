#include "pcl/embedding.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "pcl/errors.hpp"
#include "pcl/io_util.hpp"

namespace pcl {

EmbeddingFormat embedding_format_from_name(const std::string& name) {
  if (name == "text-vec") return EmbeddingFormat::TextVec;
  if (name == "word2vec-binary") return EmbeddingFormat::Word2VecBinary;
  throw ConfigError("unknown embedding format '" + name + "' (text-vec | word2vec-binary)");
}

std::string to_string(EmbeddingFormat format) {
  return format == EmbeddingFormat::TextVec ? "text-vec" : "word2vec-binary";
}

namespace {

using Entries = std::unordered_map<std::string, std::vector<float>>;

bool looks_like_header(const std::string& line) {
  std::istringstream ss(line);
  long v = 0, d = 0;
  std::string extra;
  if (!(ss >> v >> d)) return false;
  if (ss >> extra) return false;
  return v > 0 && d > 0;
}

Entries read_text_vec(const std::filesystem::path& path, int& dim_out) {
  const auto lines = read_lines(path);
  Entries entries;
  int dim = -1;
  std::size_t start = 0;
  if (!lines.empty() && looks_like_header(lines[0])) {
    std::istringstream ss(lines[0]);
    long v;
    ss >> v >> dim;
    start = 1;
  }
  for (std::size_t i = start; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::istringstream ss(lines[i]);
    std::string token;
    if (!(ss >> token))
      throw FormatError(path.string() + ": line " + std::to_string(i + 1) + ": missing token");
    std::vector<float> vec;
    double x;
    while (ss >> x) vec.push_back(static_cast<float>(x));
    if (!ss.eof())
      throw FormatError(path.string() + ": line " + std::to_string(i + 1) + ": non-numeric value");
    if (vec.empty())
      throw FormatError(path.string() + ": line " + std::to_string(i + 1) + ": no vector values");
    if (dim < 0) dim = static_cast<int>(vec.size());
    if (static_cast<int>(vec.size()) != dim)
      throw FormatError(path.string() + ": line " + std::to_string(i + 1) + ": expected " +
                        std::to_string(dim) + " floats, got " + std::to_string(vec.size()));
    entries.emplace(std::move(token), std::move(vec));
  }
  if (dim <= 0) throw FormatError(path.string() + ": empty embedding file");
  dim_out = dim;
  return entries;
}

Entries read_word2vec_binary(const std::filesystem::path& path, int& dim_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open embedding file: " + path.string());
  long vocab_size = 0, dim = 0;
  if (!(in >> vocab_size >> dim) || vocab_size <= 0 || dim <= 0)
    throw FormatError(path.string() + ": unreadable word2vec header");
  in.get();  // the single separator after the header

  Entries entries;
  for (long i = 0; i < vocab_size; ++i) {
    std::string token;
    int c;
    while ((c = in.get()) != EOF && (c == '\n' || c == '\r')) {
    }
    while (c != EOF && c != ' ') {
      token.push_back(static_cast<char>(c));
      c = in.get();
    }
    if (c == EOF)
      throw FormatError(path.string() + ": truncated entry " + std::to_string(i + 1));
    std::vector<float> vec(static_cast<std::size_t>(dim));
    in.read(reinterpret_cast<char*>(vec.data()), dim * static_cast<long>(sizeof(float)));
    if (!in)
      throw FormatError(path.string() + ": truncated vector for token '" + token + "'");
    entries.emplace(std::move(token), std::move(vec));
  }
  dim_out = static_cast<int>(dim);
  return entries;
}

}  // namespace

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, EmbeddingFormat format,
                                    const Vocabulary& vocab, std::mt19937_64& oov_rng) {
  int dim = 0;
  Entries entries = format == EmbeddingFormat::TextVec ? read_text_vec(path, dim)
                                                       : read_word2vec_binary(path, dim);
  EmbeddingTable table = EmbeddingTable::random(dim, vocab, oov_rng);
  table.found = 0;
  for (int i = 2; i < vocab.size(); ++i) {
    auto it = entries.find(vocab.token(i));
    if (it == entries.end()) continue;
    ++table.found;
    for (int j = 0; j < dim; ++j) table.matrix(i, j) = static_cast<double>(it->second[j]);
  }
  const int real_words = vocab.size() - 2;
  table.coverage = real_words > 0 ? static_cast<double>(table.found) / real_words : 0.0;
  return table;
}

EmbeddingTable EmbeddingTable::random(int dimension, const Vocabulary& vocab,
                                      std::mt19937_64& oov_rng) {
  if (dimension < 1) throw ValidationError("embedding dimension must be >= 1");
  EmbeddingTable table;
  table.dimension = dimension;
  table.matrix.resize(vocab.size(), dimension);
  std::uniform_real_distribution<double> dist(-0.25, 0.25);
  for (int i = 0; i < vocab.size(); ++i)
    for (int j = 0; j < dimension; ++j) table.matrix(i, j) = dist(oov_rng);
  table.matrix.row(Vocabulary::kPad).setZero();
  table.found = 0;
  table.coverage = 0;
  return table;
}

std::string write_text_vec(const std::vector<std::pair<std::string, std::vector<float>>>& entries,
                           bool with_header) {
  std::ostringstream out;
  if (with_header && !entries.empty())
    out << entries.size() << " " << entries.front().second.size() << "\n";
  for (const auto& [token, vec] : entries) {
    out << token;
    for (float v : vec) out << " " << format_double(v);
    out << "\n";
  }
  return out.str();
}

std::string write_word2vec_binary(
    const std::vector<std::pair<std::string, std::vector<float>>>& entries) {
  std::ostringstream out;
  out << entries.size() << " " << (entries.empty() ? 0 : entries.front().second.size()) << "\n";
  for (const auto& [token, vec] : entries) {
    out << token << ' ';
    out.write(reinterpret_cast<const char*>(vec.data()),
              static_cast<std::streamsize>(vec.size() * sizeof(float)));
  }
  return out.str();
}

}  // namespace pcl
