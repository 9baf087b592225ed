#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <string>

#include "pcl/params.hpp"

namespace pcl {

// Self-describing tensor archive: 8-byte magic, u64 little-endian header
// length, UTF-8 JSON header, then raw float64 little-endian row-major data for
// each tensor in manifest order. Doubles round-trip bit-exactly.
//
// The JSON header carries a free-form "meta" object (family, config, vocab
// hash, encoder id, epoch, dev F1, tokenizer vocab, ...) plus the generated
// tensor manifest.
struct Archive {
  nlohmann::json& meta();
  const nlohmann::json& meta() const;

  Archive();
  ~Archive();
  Archive(Archive&&) noexcept;
  Archive& operator=(Archive&&) noexcept;

  void save(const std::filesystem::path& path, const ParameterStore& params) const;

  // Loads header + tensors; fails with FormatError on bad magic or framing.
  static Archive load(const std::filesystem::path& path, ParameterStore& params_out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pcl
