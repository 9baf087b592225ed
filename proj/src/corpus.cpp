#include "pcl/corpus.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "pcl/errors.hpp"
#include "pcl/io_util.hpp"

namespace pcl {

bool DataSplit::has_labels() const {
  for (const auto& r : records)
    if (!r.binary_label) return false;
  return true;
}

std::vector<int> DataSplit::binary_labels() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.binary_label)
      throw LabelError("split '" + name + "' has unlabeled record " + r.par_id);
    out.push_back(*r.binary_label);
  }
  return out;
}

int TsvSchema::max_column() const {
  int m = std::max({par_id, art_id, keyword, country_code, text});
  return std::max(m, label);
}

int binarize_label(int raw, int cutoff) {
  if (raw < 0 || raw > 4)
    throw ValidationError("raw label out of range [0,4]: " + std::to_string(raw));
  if (cutoff < 1 || cutoff > 4)
    throw ValidationError("cutoff out of range [1,4]: " + std::to_string(cutoff));
  return raw >= cutoff ? 1 : 0;
}

namespace {

int parse_raw_label(const std::string& field, std::size_t line_no) {
  const std::string t = trim(field);
  if (t.empty() || t.size() > 1 || t[0] < '0' || t[0] > '9')
    throw ValidationError("line " + std::to_string(line_no) + ": bad label value '" + field + "'");
  int raw = t[0] - '0';
  if (raw > 4)
    throw ValidationError("line " + std::to_string(line_no) + ": label " + std::to_string(raw) +
                          " outside 0..4");
  return raw;
}

}  // namespace

std::vector<ParagraphRecord> load_task_tsv(const std::filesystem::path& path,
                                           const TsvSchema& schema, int cutoff,
                                           LoadStats* stats) {
  if (!std::filesystem::exists(path)) throw InputError("dataset file not found: " + path.string());
  if (cutoff < 1 || cutoff > 4)
    throw ValidationError("cutoff out of range [1,4]: " + std::to_string(cutoff));

  const std::vector<std::string> lines = read_lines(path);
  const int need = schema.max_column() + 1;
  std::vector<ParagraphRecord> records;
  LoadStats local;
  std::unordered_set<std::string> seen_ids;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (schema.header && i == 0) continue;
    if (lines[i].empty()) continue;
    const auto cols = split_tabs(lines[i]);
    if (static_cast<int>(cols.size()) < need)
      throw ParseError("line " + std::to_string(line_no) + ": expected at least " +
                       std::to_string(need) + " columns, got " + std::to_string(cols.size()));
    ++local.rows_read;

    ParagraphRecord rec;
    rec.par_id = trim(cols[schema.par_id]);
    rec.art_id = trim(cols[schema.art_id]);
    rec.keyword = trim(cols[schema.keyword]);
    rec.country_code = trim(cols[schema.country_code]);
    rec.text = trim(cols[schema.text]);
    if (schema.label >= 0) {
      const std::string field = trim(cols[schema.label]);
      if (!field.empty()) {
        int raw = parse_raw_label(field, line_no);
        rec.raw_label = raw;
        rec.binary_label = binarize_label(raw, cutoff);
      }
    }
    if (rec.par_id.empty())
      throw ValidationError("line " + std::to_string(line_no) + ": empty par_id");
    if (rec.text.empty()) {
      ++local.rows_dropped_empty_text;
      continue;
    }
    if (!seen_ids.insert(rec.par_id).second)
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate par_id '" +
                            rec.par_id + "'");
    records.push_back(std::move(rec));
  }

  std::sort(records.begin(), records.end(),
            [](const ParagraphRecord& a, const ParagraphRecord& b) { return a.par_id < b.par_id; });
  if (stats) *stats = local;
  return records;
}

std::string to_task_tsv(const std::vector<ParagraphRecord>& records, const TsvSchema& schema) {
  const int ncols = schema.max_column() + 1;
  std::ostringstream out;
  if (schema.header) {
    std::vector<std::string> head(ncols);
    head[schema.par_id] = "par_id";
    head[schema.art_id] = "art_id";
    head[schema.keyword] = "keyword";
    head[schema.country_code] = "country_code";
    head[schema.text] = "text";
    if (schema.label >= 0) head[schema.label] = "label";
    for (int c = 0; c < ncols; ++c) out << (c ? "\t" : "") << head[c];
    out << "\n";
  }
  auto clean = [](std::string s) {
    // Embedded tabs/newlines are unsupported by the format.
    for (char& c : s)
      if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    return s;
  };
  for (const auto& r : records) {
    std::vector<std::string> cols(ncols);
    cols[schema.par_id] = r.par_id;
    cols[schema.art_id] = r.art_id;
    cols[schema.keyword] = r.keyword;
    cols[schema.country_code] = r.country_code;
    cols[schema.text] = clean(r.text);
    if (schema.label >= 0 && r.raw_label) cols[schema.label] = std::to_string(*r.raw_label);
    for (int c = 0; c < ncols; ++c) out << (c ? "\t" : "") << cols[c];
    out << "\n";
  }
  return out.str();
}

namespace {

std::map<std::string, DataSplit> explicit_splits(const std::vector<ParagraphRecord>& records,
                                                 const SplitConfig& config) {
  std::unordered_map<std::string, const ParagraphRecord*> by_id;
  for (const auto& r : records) by_id[r.par_id] = &r;

  std::map<std::string, DataSplit> out;
  std::unordered_map<std::string, std::string> assigned;  // par_id -> split
  std::vector<std::string> missing;
  for (const auto& [name, ids] : config.id_lists) {
    DataSplit split;
    split.name = name;
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        missing.push_back(id);
        continue;
      }
      auto [prev, inserted] = assigned.emplace(id, name);
      if (!inserted)
        throw ValidationError("par_id '" + id + "' assigned to both '" + prev->second +
                              "' and '" + name + "'");
      split.records.push_back(*it->second);
    }
    out.emplace(name, std::move(split));
  }
  if (!missing.empty()) {
    std::string msg = "split ids not present in corpus:";
    for (const auto& id : missing) msg += " " + id;
    throw ValidationError(msg);
  }
  if (assigned.size() != records.size()) {
    std::string msg = "records not covered by any split:";
    for (const auto& r : records)
      if (!assigned.count(r.par_id)) msg += " " + r.par_id;
    throw ValidationError(msg);
  }
  return out;
}

std::map<std::string, DataSplit> stratified_splits(const std::vector<ParagraphRecord>& records,
                                                   const SplitConfig& config) {
  if (config.fractions.empty()) throw ConfigError("stratified split needs fractions");
  double total = 0;
  for (const auto& [name, f] : config.fractions) {
    if (f < 0 || f > 1) throw ConfigError("split fraction for '" + name + "' outside [0,1]");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1, got " + format_double(total));

  for (const auto& r : records)
    if (!r.binary_label)
      throw LabelError("stratified split requires labels; record " + r.par_id + " is unlabeled");

  // Group by class, shuffle deterministically, apportion per split by largest
  // remainder so each class count is within 1 of proportional.
  std::map<int, std::vector<const ParagraphRecord*>> by_class;
  for (const auto& r : records) by_class[*r.binary_label].push_back(&r);

  std::vector<std::string> split_names;
  for (const auto& [name, f] : config.fractions) split_names.push_back(name);

  std::map<std::string, DataSplit> out;
  for (const auto& name : split_names) out[name].name = name;

  std::mt19937_64 rng(config.seed);
  for (auto& [cls, members] : by_class) {
    std::sort(members.begin(), members.end(),
              [](const ParagraphRecord* a, const ParagraphRecord* b) { return a->par_id < b->par_id; });
    std::shuffle(members.begin(), members.end(), rng);

    const std::size_t m = members.size();
    std::vector<std::size_t> counts(split_names.size());
    std::vector<std::pair<double, std::size_t>> remainders;  // (-frac_part, index)
    std::size_t used = 0;
    for (std::size_t s = 0; s < split_names.size(); ++s) {
      double target = config.fractions.at(split_names[s]) * static_cast<double>(m);
      counts[s] = static_cast<std::size_t>(target);
      remainders.push_back({-(target - static_cast<double>(counts[s])), s});
      used += counts[s];
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t k = 0; used < m; ++k, ++used) ++counts[remainders[k % remainders.size()].second];

    std::size_t cursor = 0;
    for (std::size_t s = 0; s < split_names.size(); ++s)
      for (std::size_t k = 0; k < counts[s]; ++k)
        out[split_names[s]].records.push_back(*members[cursor++]);
  }

  for (auto& [name, split] : out)
    std::sort(split.records.begin(), split.records.end(),
              [](const ParagraphRecord& a, const ParagraphRecord& b) { return a.par_id < b.par_id; });
  return out;
}

}  // namespace

std::map<std::string, DataSplit> make_splits(const std::vector<ParagraphRecord>& records,
                                             const SplitConfig& config) {
  return config.mode == SplitConfig::Mode::Explicit ? explicit_splits(records, config)
                                                    : stratified_splits(records, config);
}

}  // namespace pcl
