#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "pcl/config.hpp"

namespace pcl::commands {

// Pipeline commands. All throw on failure; the CLI maps exception types to
// exit codes (2 input, 3 registry/selection, 4 labels, 1 unexpected).

void prepare(const PipelineConfig& cfg);

void train_one(const PipelineConfig& cfg, const std::string& run_id, bool resume);

void grid(const PipelineConfig& cfg, const std::optional<std::string>& family_filter, int jobs,
          bool resume, const std::filesystem::path& config_path);

void predict_split(const PipelineConfig& cfg, const std::string& run_id, const std::string& split);

void ensemble(const PipelineConfig& cfg, const std::string& name);

void sweep(const PipelineConfig& cfg, std::optional<int> n_max_override);

void analyze(const PipelineConfig& cfg, const std::string& source, const std::string& split,
             std::optional<double> threshold_override);

void report(const PipelineConfig& cfg);

struct MakeEncoderOptions {
  std::filesystem::path out;
  std::string encoder_id = "mini";
  std::filesystem::path from_tsv;
  bool header = false;
  int dim = 32;
  int heads = 2;
  int layers = 2;
  int ff_dim = 64;
  int max_positions = 128;
  int max_whole_words = 200;
  std::uint64_t seed = 1;
};

void make_encoder(const MakeEncoderOptions& options);

}  // namespace pcl::commands
