#include "pcl/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "pcl/errors.hpp"
#include "pcl/io_util.hpp"

namespace pcl {

std::string PredictionSet::to_tsv() const {
  std::ostringstream out;
  out << "par_id\tp_positive\n";
  for (const auto& [id, p] : entries) out << id << "\t" << format_double(p) << "\n";
  return out.str();
}

PredictionSet PredictionSet::from_tsv(const std::string& source_id, const std::string& split,
                                      const std::string& text) {
  PredictionSet set;
  set.source_id = source_id;
  set.split = split;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == "par_id\tp_positive") continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 2)
      throw ParseError("prediction line " + std::to_string(line_no) + ": expected 2 columns");
    char* end = nullptr;
    const double p = std::strtod(cols[1].c_str(), &end);
    if (end == cols[1].c_str() || *end != '\0' || !std::isfinite(p) || p < 0 || p > 1)
      throw ValidationError("prediction line " + std::to_string(line_no) +
                            ": probability outside [0,1]: " + cols[1]);
    if (!seen.insert(cols[0]).second)
      throw ValidationError("duplicate par_id in predictions: " + cols[0]);
    set.entries.push_back({cols[0], p});
  }
  return set;
}

std::string EnsembleSpec::to_json() const {
  nlohmann::json j{{"ensemble_id", ensemble_id}, {"members", members}};
  if (threshold)
    j["threshold"] = *threshold;
  else
    j["threshold"] = nullptr;
  return j.dump(2) + "\n";
}

PredictionSet average(std::span<const PredictionSet> sets) {
  if (sets.empty()) throw ValidationError("average over an empty member list");
  const auto& first = sets.front();

  PredictionSet out;
  out.split = first.split;
  std::string combined = "avg(";
  for (std::size_t i = 0; i < sets.size(); ++i)
    combined += (i ? "," : "") + sets[i].source_id;
  out.source_id = combined + ")";

  std::unordered_map<std::string, std::size_t> order;
  order.reserve(first.entries.size());
  for (std::size_t i = 0; i < first.entries.size(); ++i)
    order.emplace(first.entries[i].first, i);

  std::vector<std::vector<double>> collected(first.entries.size());
  for (const auto& set : sets) {
    if (set.split != first.split)
      throw AlignmentError("prediction sets from different splits: " + set.split + " vs " +
                           first.split);
    if (set.entries.size() != first.entries.size() ||
        [&] {
          for (const auto& [id, p] : set.entries)
            if (!order.count(id)) return true;
          return false;
        }()) {
      // Report the symmetric difference.
      std::set<std::string> a, b;
      for (const auto& [id, p] : first.entries) a.insert(id);
      for (const auto& [id, p] : set.entries) b.insert(id);
      std::string only_a, only_b;
      for (const auto& id : a)
        if (!b.count(id)) only_a += " " + id;
      for (const auto& id : b)
        if (!a.count(id)) only_b += " " + id;
      throw AlignmentError("par_id coverage mismatch between " + first.source_id + " and " +
                           set.source_id + "; only in first:" + only_a +
                           "; only in second:" + only_b);
    }
    for (const auto& [id, p] : set.entries) collected[order.at(id)].push_back(p);
  }

  // Summing in sorted order makes the mean bit-exactly independent of the
  // member list's permutation.
  out.entries.reserve(first.entries.size());
  const double inv = 1.0 / static_cast<double>(sets.size());
  for (std::size_t i = 0; i < first.entries.size(); ++i) {
    auto& values = collected[i];
    std::sort(values.begin(), values.end());
    double sum = 0;
    for (double v : values) sum += v;
    out.entries.push_back({first.entries[i].first, sum * inv});
  }
  return out;
}

std::vector<int> apply_threshold(const PredictionSet& set, double threshold) {
  if (threshold <= 0 || threshold >= 1)
    throw ValidationError("threshold must lie in (0,1): " + format_double(threshold));
  std::vector<int> preds;
  preds.reserve(set.entries.size());
  for (const auto& [id, p] : set.entries) preds.push_back(p >= threshold ? 1 : 0);
  return preds;
}

std::vector<double> make_threshold_grid(double start, double stop, double step) {
  if (step <= 0 || start <= 0 || stop >= 1 || start > stop)
    throw ConfigError("threshold grid must satisfy 0 < start <= stop < 1 with positive step");
  const int n = static_cast<int>(std::round((stop - start) / step));
  std::vector<double> grid;
  for (int i = 0; i <= n; ++i) grid.push_back(start + i * step);
  return grid;
}

std::vector<int> labels_for(const PredictionSet& set,
                            const std::unordered_map<std::string, int>& labels_by_id) {
  std::vector<int> labels;
  labels.reserve(set.entries.size());
  std::string missing;
  for (const auto& [id, p] : set.entries) {
    auto it = labels_by_id.find(id);
    if (it == labels_by_id.end()) {
      missing += " " + id;
      continue;
    }
    labels.push_back(it->second);
  }
  if (!missing.empty()) throw AlignmentError("no label for par_id:" + missing);
  return labels;
}

ThresholdChoice optimize_threshold(const PredictionSet& set, std::span<const int> labels,
                                   std::span<const double> grid) {
  if (grid.empty()) throw ValidationError("threshold grid is empty");
  if (labels.size() != set.entries.size())
    throw AlignmentError("labels do not align with prediction entries");
  long positives = 0;
  for (int y : labels) positives += y;
  if (positives == 0)
    throw ValidationError(
        "all labels are negative; F1 is undefined at every threshold (degenerate dev split)");

  // Sort probabilities descending once, then each threshold costs a binary
  // search over the prefix counts.
  std::vector<std::pair<double, int>> by_p(set.entries.size());
  for (std::size_t i = 0; i < set.entries.size(); ++i)
    by_p[i] = {set.entries[i].second, labels[i]};
  std::sort(by_p.begin(), by_p.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<long> tp_prefix(by_p.size() + 1, 0);
  for (std::size_t i = 0; i < by_p.size(); ++i)
    tp_prefix[i + 1] = tp_prefix[i] + (by_p[i].second == 1 ? 1 : 0);

  ThresholdChoice best;
  bool have_best = false;
  std::vector<double> sorted_grid(grid.begin(), grid.end());
  std::sort(sorted_grid.begin(), sorted_grid.end());
  for (double threshold : sorted_grid) {
    if (threshold <= 0 || threshold >= 1)
      throw ValidationError("grid threshold outside (0,1): " + format_double(threshold));
    // Number of predictions with p >= threshold.
    auto it = std::partition_point(by_p.begin(), by_p.end(),
                                   [&](const auto& e) { return e.first >= threshold; });
    const long npred = it - by_p.begin();
    const long tp = tp_prefix[static_cast<std::size_t>(npred)];
    const long fp = npred - tp;
    const long fn = positives - tp;
    const double precision = npred > 0 ? static_cast<double>(tp) / static_cast<double>(npred) : 0;
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0;
    if (!have_best || f1 > best.f1) {
      have_best = true;
      best.threshold = threshold;
      best.f1 = f1;
      best.metrics.precision = precision;
      best.metrics.recall = recall;
      best.metrics.f1 = f1;
      best.metrics.tp = tp;
      best.metrics.fp = fp;
      best.metrics.fn = fn;
      best.metrics.tn = static_cast<long>(labels.size()) - tp - fp - fn;
      best.metrics.degenerate = npred == 0;
    }
  }
  return best;
}

EnsembleSpec select_top_n(std::span<const RankedRun> registry, int n,
                          const std::optional<std::string>& family_filter) {
  if (n < 1) throw ValidationError("ensemble size must be >= 1");
  std::vector<RankedRun> pool;
  for (const auto& run : registry)
    if (!family_filter || run.family == *family_filter) pool.push_back(run);
  if (static_cast<int>(pool.size()) < n)
    throw SelectionError("need " + std::to_string(n) + " runs" +
                         (family_filter ? " of family " + *family_filter : "") + ", registry has " +
                         std::to_string(pool.size()));
  std::sort(pool.begin(), pool.end(), [](const RankedRun& a, const RankedRun& b) {
    if (a.best_dev_f1 != b.best_dev_f1) return a.best_dev_f1 > b.best_dev_f1;
    return a.run_id < b.run_id;
  });
  EnsembleSpec spec;
  for (int i = 0; i < n; ++i) spec.members.push_back(pool[static_cast<std::size_t>(i)].run_id);
  return spec;
}

std::vector<SweepPoint> ensemble_sweep(
    std::span<const RankedRun> registry, int n_max,
    const std::unordered_map<std::string, PredictionSet>& dev_sets,
    const std::unordered_map<std::string, int>& labels_by_id, std::span<const double> grid,
    const SweepOptions& options) {
  if (n_max < 1) throw ValidationError("n_max must be >= 1");
  if (static_cast<int>(registry.size()) < n_max)
    throw SelectionError("need " + std::to_string(n_max) + " runs, registry has " +
                         std::to_string(registry.size()));
  std::vector<SweepPoint> points;
  for (int n = 1; n <= n_max; ++n) {
    const EnsembleSpec spec = select_top_n(registry, n);
    std::vector<PredictionSet> members;
    for (const auto& run_id : spec.members) {
      auto it = dev_sets.find(run_id);
      if (it == dev_sets.end())
        throw SelectionError("no dev predictions for run " + run_id);
      members.push_back(it->second);
    }
    const PredictionSet avg = average(members);
    const std::vector<int> labels = labels_for(avg, labels_by_id);
    SweepPoint point;
    point.n = n;
    if (options.retune_threshold) {
      const ThresholdChoice choice = optimize_threshold(avg, labels, grid);
      point.threshold = choice.threshold;
      point.precision = choice.metrics.precision;
      point.recall = choice.metrics.recall;
      point.f1 = choice.metrics.f1;
    } else {
      const MetricsReport report = prf1(apply_threshold(avg, options.frozen_threshold), labels);
      point.threshold = options.frozen_threshold;
      point.precision = report.precision;
      point.recall = report.recall;
      point.f1 = report.f1;
    }
    points.push_back(point);
  }
  return points;
}

std::string sweep_to_csv(std::span<const SweepPoint> points) {
  std::ostringstream out;
  out << "n,precision,recall,f1\n";
  for (const auto& p : points)
    out << p.n << "," << format_double(p.precision) << "," << format_double(p.recall) << ","
        << format_double(p.f1) << "\n";
  return out.str();
}

std::string render_sweep_svg(std::span<const SweepPoint> points) {
  const int width = 640, height = 400;
  const int ml = 60, mr = 20, mt = 20, mb = 50;
  const double plot_w = width - ml - mr;
  const double plot_h = height - mt - mb;
  const int n_max = points.empty() ? 1 : points.back().n;

  char buf[256];
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // Axes and gridlines: y from 0 to 1, x from 1 to n_max.
  for (int i = 0; i <= 10; ++i) {
    const double y = mt + plot_h - plot_h * i / 10.0;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%d\" y1=\"%.1f\" x2=\"%d\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%d\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\">%.1f</text>\n",
                  ml, y, width - mr, y, ml - 6, y + 4, i / 10.0);
    svg << buf;
  }
  const int x_step = std::max(1, n_max / 10);
  for (int n = 1; n <= n_max; n += x_step) {
    const double x = ml + (n_max > 1 ? plot_w * (n - 1) / (n_max - 1) : plot_w / 2);
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%d\" font-size=\"11\" text-anchor=\"middle\">%d</text>\n",
                  x, height - mb + 18, n);
    svg << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>"
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n",
                ml, mt, ml, height - mb, ml, height - mb, width - mr, height - mb);
  svg << buf;
  svg << "<text x=\"" << (ml + plot_w / 2) << "\" y=\"" << (height - 12)
      << "\" font-size=\"12\" text-anchor=\"middle\">ensemble size</text>\n";
  svg << "<text x=\"16\" y=\"" << (mt + plot_h / 2)
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (mt + plot_h / 2) << ")\">F1</text>\n";

  std::string polyline;
  for (const auto& p : points) {
    const double x = ml + (n_max > 1 ? plot_w * (p.n - 1) / (n_max - 1) : plot_w / 2);
    const double y = mt + plot_h - plot_h * p.f1;
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x, y);
    polyline += buf;
    std::snprintf(buf, sizeof(buf), "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"#1f77b4\"/>\n",
                  x, y);
    svg << buf;
  }
  svg << "<polyline points=\"" << polyline
      << "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace pcl
