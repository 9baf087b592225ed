#include "pcl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pcl/errors.hpp"
#include "pcl/io_util.hpp"

namespace pcl {

MetricsReport prf1(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw AlignmentError("predictions and labels differ in length: " +
                         std::to_string(predictions.size()) + " vs " +
                         std::to_string(labels.size()));
  MetricsReport r;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i], y = labels[i];
    if ((p != 0 && p != 1) || (y != 0 && y != 1))
      throw ValidationError("predictions and labels must be binary");
    if (p == 1 && y == 1)
      ++r.tp;
    else if (p == 1 && y == 0)
      ++r.fp;
    else if (p == 0 && y == 1)
      ++r.fn;
    else
      ++r.tn;
  }
  if (r.tp + r.fp > 0)
    r.precision = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp);
  else
    r.degenerate = true;
  if (r.tp + r.fn > 0)
    r.recall = static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn);
  else
    r.degenerate = true;
  if (r.precision + r.recall > 0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  else
    r.degenerate = true;
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j{{"precision", precision}, {"recall", recall}, {"f1", f1},
                   {"tp", tp},               {"fp", fp},         {"fn", fn},
                   {"tn", tn},               {"degenerate", degenerate}};
  return j.dump(2) + "\n";
}

ErrorBreakdown error_by_keyword(std::span<const int> predictions,
                                std::span<const ParagraphRecord> records) {
  if (predictions.size() != records.size())
    throw AlignmentError("predictions and records differ in length");
  ErrorBreakdown out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (!rec.binary_label) throw LabelError("record " + rec.par_id + " is unlabeled");
    auto& cell = out.per_keyword[rec.keyword];
    ++cell.total;
    if (*rec.binary_label == 1) ++cell.total_pcl;
    if (predictions[i] == 1 && *rec.binary_label == 0) {
      ++cell.fp;
      ++out.global_fp;
    } else if (predictions[i] == 0 && *rec.binary_label == 1) {
      ++cell.fn;
      ++out.global_fn;
    }
  }
  return out;
}

std::string ErrorBreakdown::to_csv() const {
  std::ostringstream out;
  out << "keyword,fp,fn,total_pcl,total\n";
  long total_pcl = 0, total = 0;
  for (const auto& [keyword, cell] : per_keyword) {
    out << keyword << "," << cell.fp << "," << cell.fn << "," << cell.total_pcl << ","
        << cell.total << "\n";
    total_pcl += cell.total_pcl;
    total += cell.total;
  }
  out << "ALL," << global_fp << "," << global_fn << "," << total_pcl << "," << total << "\n";
  return out.str();
}

std::string export_errors(std::span<const int> predictions,
                          std::span<const double> probabilities,
                          std::span<const ParagraphRecord> records, double threshold,
                          ErrorKind kind) {
  if (predictions.size() != records.size() || probabilities.size() != records.size())
    throw AlignmentError("predictions, probabilities and records differ in length");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].binary_label)
      throw LabelError("record " + records[i].par_id + " is unlabeled");
    const int y = *records[i].binary_label;
    const bool is_fp = predictions[i] == 1 && y == 0;
    const bool is_fn = predictions[i] == 0 && y == 1;
    if ((kind == ErrorKind::FalsePositive && is_fp) || (kind == ErrorKind::FalseNegative && is_fn))
      rows.push_back(i);
  }
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(probabilities[a] - threshold) > std::abs(probabilities[b] - threshold);
  });
  std::ostringstream out;
  out << "par_id\tkeyword\ttext\tp_positive\n";
  for (std::size_t i : rows)
    out << records[i].par_id << "\t" << records[i].keyword << "\t" << records[i].text << "\t"
        << format_double(probabilities[i]) << "\n";
  return out.str();
}

MacroMetrics macro_average(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw ValidationError("macro_average over an empty report list");
  MacroMetrics m;
  for (const auto& r : reports) {
    m.precision += r.precision;
    m.recall += r.recall;
    m.f1 += r.f1;
  }
  const double n = static_cast<double>(reports.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

}  // namespace pcl
