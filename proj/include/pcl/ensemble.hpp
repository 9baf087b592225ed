#pragma once

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pcl/evaluation.hpp"

namespace pcl {

// Per-example positive-class probabilities from one model or one ensemble.
struct PredictionSet {
  std::string source_id;
  std::string split;  // dev / test
  std::vector<std::pair<std::string, double>> entries;  // (par_id, p_positive)

  std::string to_tsv() const;  // header "par_id\tp_positive"
  static PredictionSet from_tsv(const std::string& source_id, const std::string& split,
                                const std::string& text);
};

struct EnsembleSpec {
  std::string ensemble_id;
  std::vector<std::string> members;        // ordered run ids
  std::optional<double> threshold;         // set by optimize_threshold

  std::string to_json() const;
};

// Arithmetic mean of member probabilities per par_id. Members must cover the
// same ids on the same split; output order follows the first member.
PredictionSet average(std::span<const PredictionSet> sets);

// predict 1 iff p_positive >= threshold, in entry order.
std::vector<int> apply_threshold(const PredictionSet& set, double threshold);

// Inclusive threshold grid start, start+step, ..., stop.
std::vector<double> make_threshold_grid(double start, double stop, double step);

// Labels for each entry of the set, joined by par_id.
std::vector<int> labels_for(const PredictionSet& set,
                            const std::unordered_map<std::string, int>& labels_by_id);

struct ThresholdChoice {
  double threshold = 0;
  double f1 = 0;
  MetricsReport metrics;
};

// Grid threshold maximizing positive-class F1, ties broken toward the
// smallest threshold. Errors when labels contain no positives.
ThresholdChoice optimize_threshold(const PredictionSet& set, std::span<const int> labels,
                                   std::span<const double> grid);

struct RankedRun {
  std::string run_id;
  std::string family;
  double best_dev_f1 = 0;
};

// The n runs with the highest development F1 (ties by run_id); the threshold
// is left unset until optimize_threshold runs on the averaged predictions.
EnsembleSpec select_top_n(std::span<const RankedRun> registry, int n,
                          const std::optional<std::string>& family_filter = std::nullopt);

struct SweepPoint {
  int n = 0;
  double threshold = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct SweepOptions {
  bool retune_threshold = true;
  double frozen_threshold = 0.35;
};

// For each n in 1..n_max: build the top-n ensemble, average the members' dev
// predictions, tune (or freeze) the threshold, and record dev metrics.
std::vector<SweepPoint> ensemble_sweep(
    std::span<const RankedRun> registry, int n_max,
    const std::unordered_map<std::string, PredictionSet>& dev_sets,
    const std::unordered_map<std::string, int>& labels_by_id, std::span<const double> grid,
    const SweepOptions& options = {});

std::string sweep_to_csv(std::span<const SweepPoint> points);  // "n,precision,recall,f1"
std::string render_sweep_svg(std::span<const SweepPoint> points);

}  // namespace pcl
