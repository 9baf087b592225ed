#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pcl {

// One dataset paragraph. raw_label / binary_label are absent for unlabeled
// splits (the organizers' test file ships without gold labels).
struct ParagraphRecord {
  std::string par_id;
  std::string art_id;
  std::string keyword;       // vulnerable-group search term, e.g. "homeless"
  std::string country_code;  // 2-letter
  std::string text;
  std::optional<int> raw_label;     // 0..4
  std::optional<int> binary_label;  // 1 iff raw_label >= cutoff
};

struct DataSplit {
  std::string name;  // train / dev / test
  std::vector<ParagraphRecord> records;

  bool has_labels() const;
  // Positive-class (PCL) labels in record order; throws LabelError if any
  // record is unlabeled.
  std::vector<int> binary_labels() const;
};

// Maps the six logical fields to 0-based column positions.
struct TsvSchema {
  int par_id = 0;
  int art_id = 1;
  int keyword = 2;
  int country_code = 3;
  int text = 4;
  int label = 5;  // -1 when the file carries no label column
  bool header = false;

  int max_column() const;
};

struct LoadStats {
  std::size_t rows_read = 0;
  std::size_t rows_dropped_empty_text = 0;
};

// Returns 1 iff raw >= cutoff. raw must be in 0..4, cutoff in 1..4.
int binarize_label(int raw, int cutoff);

// Reads a tab-separated task file, binarizes labels, drops (and counts) rows
// whose text is empty after trimming, and returns records sorted by par_id.
std::vector<ParagraphRecord> load_task_tsv(const std::filesystem::path& path,
                                           const TsvSchema& schema, int cutoff,
                                           LoadStats* stats = nullptr);

// Serializes records in the same six-column layout (empty label field for
// unlabeled records). Reloading yields field-identical records.
std::string to_task_tsv(const std::vector<ParagraphRecord>& records,
                        const TsvSchema& schema);

struct SplitConfig {
  enum class Mode { Explicit, Stratified };
  Mode mode = Mode::Stratified;
  // Explicit mode: split name -> par_ids, in the order the split file dictates.
  std::map<std::string, std::vector<std::string>> id_lists;
  // Stratified mode: split name -> fraction (fractions must sum to 1).
  std::map<std::string, double> fractions;
  std::uint64_t seed = 0;
};

// Partitions records into disjoint named splits covering the input exactly.
// Explicit splits keep their file order; stratified splits are sorted by
// par_id and preserve the per-class rate to within integer rounding.
std::map<std::string, DataSplit> make_splits(const std::vector<ParagraphRecord>& records,
                                             const SplitConfig& config);

}  // namespace pcl
