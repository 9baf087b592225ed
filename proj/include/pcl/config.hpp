#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "pcl/corpus.hpp"
#include "pcl/embedding.hpp"
#include "pcl/training.hpp"

namespace pcl {

struct EmbeddingSource {
  std::filesystem::path path;
  EmbeddingFormat format = EmbeddingFormat::TextVec;
};

struct EnsembleRule {
  std::string name;
  std::string rule = "top_n";  // top_n | top_n_plus_families
  int n = 5;
  std::optional<std::string> family;      // filter for the top_n pool
  std::map<std::string, int> extra;       // family -> count, rule top_n_plus_families
};

struct SweepConfig {
  int n_max = 30;
  bool retune_threshold = true;
  double frozen_threshold = 0.35;
};

struct ThresholdGridConfig {
  double start = 0.05;
  double stop = 0.95;
  double step = 0.05;
};

struct DatasetConfig {
  // Either one corpus file plus a split config, or pre-split files.
  std::filesystem::path tsv;
  std::filesystem::path train_tsv, dev_tsv, test_tsv;
  TsvSchema schema;
  std::optional<TsvSchema> test_schema;  // test files often ship without labels
  SplitConfig splits;
  bool use_split_config = false;
};

// The single declarative document driving every command. Relative paths are
// resolved against the config file's directory.
struct PipelineConfig {
  std::filesystem::path config_dir;
  std::uint64_t seed = 1234;
  std::filesystem::path out_dir = "out";
  int cutoff = 2;
  DatasetConfig dataset;
  int max_len = 256;
  int min_freq = 1;
  std::map<std::string, EmbeddingSource> embeddings;
  std::filesystem::path encoder_cache;
  GridConfig grid;
  ThresholdGridConfig threshold_grid;
  std::map<std::string, EnsembleRule> ensembles;
  SweepConfig sweep;
  std::map<std::string, double> report_thresholds;  // per-family overrides

  static PipelineConfig load(const std::filesystem::path& path);

  std::filesystem::path prepared_dir() const { return out_dir / "prepared"; }
  std::filesystem::path registry_path() const { return out_dir / "registry.jsonl"; }
  std::filesystem::path run_dir(const std::string& run_id) const {
    return out_dir / "runs" / run_id;
  }
  std::filesystem::path encoder_archive(const std::string& encoder_id) const;
  std::vector<double> thresholds() const;
};

}  // namespace pcl
