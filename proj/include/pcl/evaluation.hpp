#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "pcl/corpus.hpp"

namespace pcl {

// Positive class = PCL (label 1). Zero denominators yield 0 and set the
// degenerate flag.
struct MetricsReport {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  long tp = 0, fp = 0, fn = 0, tn = 0;
  bool degenerate = false;

  std::string to_json() const;
};

MetricsReport prf1(std::span<const int> predictions, std::span<const int> labels);

struct KeywordErrors {
  long fp = 0;
  long fn = 0;
  long total_pcl = 0;
  long total = 0;
};

struct ErrorBreakdown {
  std::map<std::string, KeywordErrors> per_keyword;
  long global_fp = 0;
  long global_fn = 0;

  // "keyword,fp,fn,total_pcl,total" rows plus a final ALL row.
  std::string to_csv() const;
};

// predictions aligned to records (same order); all records must be labeled.
ErrorBreakdown error_by_keyword(std::span<const int> predictions,
                                std::span<const ParagraphRecord> records);

enum class ErrorKind { FalsePositive, FalseNegative };

// TSV of misclassified paragraphs (par_id, keyword, text, p_positive), sorted
// by descending |p_positive - threshold| for qualitative review.
std::string export_errors(std::span<const int> predictions,
                          std::span<const double> probabilities,
                          std::span<const ParagraphRecord> records, double threshold,
                          ErrorKind kind);

struct MacroMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Unweighted mean of each metric across reports (averages the metrics, not
// the confusion counts).
MacroMetrics macro_average(std::span<const MetricsReport> reports);

}  // namespace pcl
