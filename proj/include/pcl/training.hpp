#pragma once

#include <filesystem>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <optional>

#include "pcl/corpus.hpp"
#include "pcl/embedding.hpp"
#include "pcl/ensemble.hpp"
#include "pcl/models/bilstm.hpp"
#include "pcl/models/cnn.hpp"
#include "pcl/models/transformer.hpp"
#include "pcl/optimizer.hpp"

namespace pcl {

enum class Family { Cnn, Bilstm, Transformer };

Family family_from_name(const std::string& name);
std::string to_string(Family family);

struct LrSchedule {
  enum class Kind { Constant, Stepwise };
  Kind kind = Kind::Constant;
  int step_size = 2;
  double gamma = 0.5;

  double lr_at(int epoch, double base_lr) const;
};

// One cell of the training grid.
struct TrainRunSpec {
  std::string run_id;
  Family family = Family::Cnn;
  std::uint64_t seed = 0;
  double base_lr = 3e-4;
  LrSchedule schedule;
  int max_epochs = 35;
  int batch_size = 32;
  std::string embedding_alias;  // cnn / bilstm only

  CnnConfig cnn;
  BilstmConfig bilstm;
  TransformerConfig transformer;

  nlohmann::json to_json() const;
  static TrainRunSpec from_json(const nlohmann::json& j);
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0;
  double dev_precision = 0;
  double dev_recall = 0;
  double dev_f1 = 0;
};

struct TrainedModelRecord {
  std::string run_id;
  TrainRunSpec spec;
  std::vector<EpochStats> per_epoch;
  int best_epoch = 0;
  double best_dev_f1 = 0;
  long param_count = 0;
  std::filesystem::path checkpoint_path;
  std::filesystem::path dev_predictions_path;
};

// Resolved external resources for one run.
struct TrainEnv {
  const Vocabulary* vocab = nullptr;          // cnn / bilstm
  std::filesystem::path embedding_path;       // empty -> random table
  EmbeddingFormat embedding_format = EmbeddingFormat::TextVec;
  int random_embedding_dim = 50;              // when no pretrained file is given
  std::filesystem::path encoder_archive;      // transformer
  std::filesystem::path run_dir;
  bool quiet = true;
};

// Builds the (untrained) classifier a spec describes. Embedding OOV rows and
// parameter init draw from streams derived from spec.seed.
std::unique_ptr<Classifier> build_model(const TrainRunSpec& spec, const TrainEnv& env);

// Rebuilds a trained classifier from its checkpoint archive. CNN/BiLSTM need
// the prepared vocabulary (validated against the stored hash); the transformer
// needs the encoder archive for its tokenizer.
std::unique_ptr<Classifier> load_model_from_checkpoint(const std::filesystem::path& checkpoint,
                                                       const Vocabulary* vocab,
                                                       const std::filesystem::path& encoder_archive);

// Trains one spec: epochs with seeded shuffling, Adam with the epoch schedule,
// dev F1 at threshold 0.5 after every epoch, best-epoch checkpointing. Writes
// spec.json, epochs.csv, checkpoint.bin and dev_predictions.tsv under
// env.run_dir. The returned record's dev predictions come from the best
// checkpoint's weights.
TrainedModelRecord train(const TrainRunSpec& spec, const DataSplit& train_split,
                         const DataSplit& dev_split, const TrainEnv& env);

// Positive-class probabilities of a model on a split, in split record order.
PredictionSet predict(Classifier& model, const DataSplit& split, const std::string& source_id);

struct FamilyGrid {
  bool enabled = false;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> embeddings;  // cnn / bilstm axis
  std::vector<int> step_sizes;          // transformer axis
  double base_lr = 3e-4;
  double gamma = 0.5;
  int max_epochs = 35;
  int batch_size = 32;
  CnnConfig cnn;
  BilstmConfig bilstm;
  TransformerConfig transformer;
};

struct GridConfig {
  FamilyGrid cnn;
  FamilyGrid bilstm;
  FamilyGrid transformer;
};

// Deterministic enumeration: cnn (embedding-major, then seeds), bilstm, then
// transformer (step_size-major, then seeds). The reference grid yields
// 12 + 12 + 22 = 46 specs.
std::vector<TrainRunSpec> expand_grid(const GridConfig& grid);

struct RegistryEntry {
  std::string run_id;
  Family family = Family::Cnn;
  std::uint64_t seed = 0;
  int best_epoch = 0;
  double best_dev_f1 = 0;
  long param_count = 0;
  std::filesystem::path checkpoint;
  std::filesystem::path dev_predictions;
  TrainRunSpec spec;

  RankedRun ranked() const { return {run_id, to_string(family), best_dev_f1}; }
};

void append_registry(const std::filesystem::path& path, const TrainedModelRecord& record);
std::vector<RegistryEntry> load_registry(const std::filesystem::path& path);

}  // namespace pcl
