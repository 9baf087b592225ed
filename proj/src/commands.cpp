#include "pcl/commands.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <iostream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "pcl/errors.hpp"
#include "pcl/io_util.hpp"

namespace pcl::commands {

namespace {

// Prepared splits use the canonical column order with a header row.
TsvSchema prepared_schema() {
  TsvSchema s;
  s.header = true;
  return s;
}

std::filesystem::path prepared_split_path(const PipelineConfig& cfg, const std::string& name) {
  return cfg.prepared_dir() / (name + ".tsv");
}

DataSplit load_prepared_split(const PipelineConfig& cfg, const std::string& name) {
  const auto path = prepared_split_path(cfg, name);
  if (!std::filesystem::exists(path))
    throw InputError("prepared split not found (run 'prepare' first): " + path.string());
  DataSplit split;
  split.name = name;
  split.records = load_task_tsv(path, prepared_schema(), cfg.cutoff);
  return split;
}

Vocabulary load_prepared_vocab(const PipelineConfig& cfg) {
  const auto path = cfg.prepared_dir() / "vocab.txt";
  if (!std::filesystem::exists(path))
    throw InputError("vocabulary not found (run 'prepare' first): " + path.string());
  return Vocabulary::from_text(read_text_file(path));
}

const EmbeddingSource& embedding_source(const PipelineConfig& cfg, const std::string& alias) {
  auto it = cfg.embeddings.find(alias);
  if (it == cfg.embeddings.end())
    throw ConfigError("embedding alias not configured: " + alias);
  if (!std::filesystem::exists(it->second.path))
    throw InputError("embedding file not found: " + it->second.path.string());
  return it->second;
}

TrainEnv make_env(const PipelineConfig& cfg, const TrainRunSpec& spec, const Vocabulary* vocab) {
  TrainEnv env;
  env.vocab = vocab;
  env.run_dir = cfg.run_dir(spec.run_id);
  env.quiet = true;
  if (spec.family == Family::Transformer) {
    env.encoder_archive = cfg.encoder_archive(spec.transformer.encoder_id);
    if (!std::filesystem::exists(env.encoder_archive))
      throw InputError("encoder weights not found: " + env.encoder_archive.string());
  } else {
    const auto& src = embedding_source(cfg, spec.embedding_alias);
    env.embedding_path = src.path;
    env.embedding_format = src.format;
  }
  return env;
}

std::unordered_map<std::string, int> labels_by_id(const DataSplit& split) {
  std::unordered_map<std::string, int> out;
  for (const auto& rec : split.records) {
    if (!rec.binary_label)
      throw LabelError("split '" + split.name + "' has unlabeled record " + rec.par_id);
    out.emplace(rec.par_id, *rec.binary_label);
  }
  return out;
}

TrainRunSpec find_spec(const PipelineConfig& cfg, const std::string& run_id) {
  for (auto& spec : expand_grid(cfg.grid))
    if (spec.run_id == run_id) return spec;
  throw ConfigError("run_id not in the configured grid: " + run_id);
}

std::unordered_map<std::string, RegistryEntry> registry_by_id(const PipelineConfig& cfg) {
  std::unordered_map<std::string, RegistryEntry> out;
  for (auto& entry : load_registry(cfg.registry_path())) out.emplace(entry.run_id, entry);
  return out;
}

PredictionSet load_prediction_tsv(const std::filesystem::path& path, const std::string& source_id,
                                  const std::string& split) {
  if (!std::filesystem::exists(path))
    throw InputError("prediction file not found: " + path.string());
  return PredictionSet::from_tsv(source_id, split, read_text_file(path));
}

// Members' predictions on a split, generating missing test predictions from
// their checkpoints.
std::vector<PredictionSet> member_predictions(const PipelineConfig& cfg,
                                              const std::unordered_map<std::string, RegistryEntry>& registry,
                                              const std::vector<std::string>& members,
                                              const std::string& split_name,
                                              const DataSplit* split, const Vocabulary* vocab) {
  std::vector<PredictionSet> sets;
  for (const auto& run_id : members) {
    auto it = registry.find(run_id);
    if (it == registry.end()) throw SelectionError("run not in registry: " + run_id);
    const auto path = split_name == "dev"
                          ? it->second.dev_predictions
                          : cfg.run_dir(run_id) / (split_name + "_predictions.tsv");
    if (!std::filesystem::exists(path)) {
      if (!split) throw InputError("prediction file not found: " + path.string());
      const auto encoder = it->second.spec.family == Family::Transformer
                               ? cfg.encoder_archive(it->second.spec.transformer.encoder_id)
                               : std::filesystem::path();
      auto model = load_model_from_checkpoint(it->second.checkpoint, vocab, encoder);
      PredictionSet set = predict(*model, *split, run_id);
      std::filesystem::create_directories(path.parent_path());
      write_text_file(path, set.to_tsv());
    }
    sets.push_back(load_prediction_tsv(path, run_id, split_name));
  }
  return sets;
}

std::vector<std::string> ensemble_members(const EnsembleRule& rule,
                                          const std::vector<RankedRun>& ranked) {
  EnsembleSpec base = select_top_n(ranked, rule.n, rule.family);
  std::vector<std::string> members = base.members;
  if (rule.rule == "top_n_plus_families") {
    std::set<std::string> present(members.begin(), members.end());
    for (const auto& [family, count] : rule.extra) {
      if (count < 1) continue;
      std::vector<RankedRun> pool;
      for (const auto& run : ranked)
        if (run.family == family && !present.count(run.run_id)) pool.push_back(run);
      if (static_cast<int>(pool.size()) < count)
        throw SelectionError("ensemble '" + rule.name + "' needs " + std::to_string(count) +
                             " extra " + family + " runs, registry has " +
                             std::to_string(pool.size()) + " available");
      EnsembleSpec extra = select_top_n(pool, count);
      for (auto& id : extra.members) {
        members.push_back(id);
        present.insert(id);
      }
    }
  }
  return members;
}

}  // namespace

void prepare(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.prepared_dir());

  std::map<std::string, DataSplit> splits;
  LoadStats stats;
  if (cfg.dataset.use_split_config) {
    auto records = load_task_tsv(cfg.dataset.tsv, cfg.dataset.schema, cfg.cutoff, &stats);
    splits = make_splits(records, cfg.dataset.splits);
  } else {
    LoadStats part;
    auto load_named = [&](const std::filesystem::path& path, const std::string& name,
                          const TsvSchema& schema) {
      DataSplit split;
      split.name = name;
      split.records = load_task_tsv(path, schema, cfg.cutoff, &part);
      stats.rows_read += part.rows_read;
      stats.rows_dropped_empty_text += part.rows_dropped_empty_text;
      splits.emplace(name, std::move(split));
    };
    load_named(cfg.dataset.train_tsv, "train", cfg.dataset.schema);
    load_named(cfg.dataset.dev_tsv, "dev", cfg.dataset.schema);
    if (!cfg.dataset.test_tsv.empty())
      load_named(cfg.dataset.test_tsv, "test",
                 cfg.dataset.test_schema ? *cfg.dataset.test_schema : cfg.dataset.schema);
    // par_ids must stay disjoint across provided files.
    std::set<std::string> seen;
    for (const auto& [name, split] : splits)
      for (const auto& rec : split.records)
        if (!seen.insert(rec.par_id).second)
          throw ValidationError("par_id '" + rec.par_id + "' appears in more than one split");
  }
  if (!splits.count("train") || !splits.count("dev"))
    throw ConfigError("prepare needs 'train' and 'dev' splits");

  for (const auto& [name, split] : splits)
    write_text_file(prepared_split_path(cfg, name), to_task_tsv(split.records, prepared_schema()));

  const Vocabulary vocab = Vocabulary::build(splits.at("train").records, cfg.min_freq);
  write_text_file(cfg.prepared_dir() / "vocab.txt", vocab.to_text());

  // Coverage across every configured embedding alias. The OOV values are
  // irrelevant here, so the generator seed is fixed.
  nlohmann::json coverage = nlohmann::json::object();
  for (const auto& [alias, src] : cfg.embeddings) {
    if (!std::filesystem::exists(src.path))
      throw InputError("embedding file not found: " + src.path.string());
    std::mt19937_64 rng(0);
    const EmbeddingTable table = EmbeddingTable::load(src.path, src.format, vocab, rng);
    coverage[alias] = {{"path", src.path.string()},
                       {"format", to_string(src.format)},
                       {"dimension", table.dimension},
                       {"found", table.found},
                       {"vocabulary_words", vocab.size() - 2},
                       {"coverage", table.coverage}};
  }
  write_text_file(cfg.prepared_dir() / "coverage.json", coverage.dump(2) + "\n");

  nlohmann::json summary{{"rows_read", stats.rows_read},
                         {"rows_dropped_empty_text", stats.rows_dropped_empty_text},
                         {"vocabulary_size", vocab.size()},
                         {"cutoff", cfg.cutoff}};
  for (const auto& [name, split] : splits) {
    long positives = 0;
    const bool labeled = split.has_labels();
    if (labeled)
      for (const auto& rec : split.records) positives += *rec.binary_label;
    summary["splits"][name] = {{"records", split.records.size()},
                               {"labeled", labeled},
                               {"positives", labeled ? nlohmann::json(positives) : nlohmann::json()}};
  }
  write_text_file(cfg.prepared_dir() / "prepare_stats.json", summary.dump(2) + "\n");

  std::cout << "prepared " << splits.size() << " splits under " << cfg.prepared_dir().string()
            << " (rows " << stats.rows_read << ", dropped " << stats.rows_dropped_empty_text
            << ", vocab " << vocab.size() << ")\n";
}

void train_one(const PipelineConfig& cfg, const std::string& run_id, bool resume) {
  const auto registry = registry_by_id(cfg);
  if (registry.count(run_id)) {
    if (resume) {
      std::cout << run_id << " already in registry, skipping\n";
      return;
    }
    throw ConfigError("run already in registry (pass --resume to skip): " + run_id);
  }
  const TrainRunSpec spec = find_spec(cfg, run_id);
  const DataSplit train_split = load_prepared_split(cfg, "train");
  const DataSplit dev_split = load_prepared_split(cfg, "dev");
  const Vocabulary vocab = load_prepared_vocab(cfg);
  const TrainEnv env = make_env(cfg, spec, &vocab);

  const TrainedModelRecord record = train(spec, train_split, dev_split, env);
  append_registry(cfg.registry_path(), record);
  std::cout << run_id << " best_epoch " << record.best_epoch << " best_dev_f1 "
            << format_double(record.best_dev_f1) << " params " << record.param_count << "\n";
}

namespace {

int spawn_train(const std::filesystem::path& config_path, const std::string& run_id) {
  const std::filesystem::path self = std::filesystem::read_symlink("/proc/self/exe");
  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    ::execl(self.c_str(), self.c_str(), "train", "--config", config_path.c_str(), "--run-id",
            run_id.c_str(), "--resume", static_cast<char*>(nullptr));
    _exit(127);
  }
  return pid;
}

}  // namespace

void grid(const PipelineConfig& cfg, const std::optional<std::string>& family_filter, int jobs,
          bool resume, const std::filesystem::path& config_path) {
  std::vector<TrainRunSpec> specs = expand_grid(cfg.grid);
  if (family_filter) {
    const Family want = family_from_name(*family_filter);
    std::erase_if(specs, [&](const TrainRunSpec& s) { return s.family != want; });
  }
  const auto registry = registry_by_id(cfg);
  std::vector<TrainRunSpec> pending;
  for (auto& spec : specs) {
    if (registry.count(spec.run_id)) {
      if (!resume)
        throw ConfigError("run already in registry (pass --resume to continue): " + spec.run_id);
      continue;
    }
    pending.push_back(spec);
  }
  std::cout << "grid: " << specs.size() << " runs configured, " << pending.size() << " to train\n";

  if (jobs <= 1) {
    for (const auto& spec : pending) train_one(cfg, spec.run_id, true);
  } else {
    std::size_t next = 0;
    std::map<pid_t, std::string> running;
    int failures = 0;
    while (next < pending.size() || !running.empty()) {
      while (static_cast<int>(running.size()) < jobs && next < pending.size()) {
        const auto& run_id = pending[next++].run_id;
        running.emplace(spawn_train(config_path, run_id), run_id);
      }
      int status = 0;
      const pid_t done = ::waitpid(-1, &status, 0);
      if (done < 0) break;
      auto it = running.find(done);
      if (it == running.end()) continue;
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        std::cerr << "run failed: " << it->second << "\n";
        ++failures;
      }
      running.erase(it);
    }
    if (failures > 0)
      throw std::runtime_error(std::to_string(failures) + " grid runs failed");
  }
  std::cout << "grid: registry now has " << load_registry(cfg.registry_path()).size()
            << " runs\n";
}

void predict_split(const PipelineConfig& cfg, const std::string& run_id,
                   const std::string& split_name) {
  const auto registry = registry_by_id(cfg);
  auto it = registry.find(run_id);
  if (it == registry.end()) throw SelectionError("run not in registry: " + run_id);
  const DataSplit split = load_prepared_split(cfg, split_name);
  const Vocabulary vocab = load_prepared_vocab(cfg);
  const auto encoder = it->second.spec.family == Family::Transformer
                           ? cfg.encoder_archive(it->second.spec.transformer.encoder_id)
                           : std::filesystem::path();
  auto model = load_model_from_checkpoint(it->second.checkpoint, &vocab, encoder);
  const PredictionSet set = predict(*model, split, run_id);
  const auto out = cfg.run_dir(run_id) / (split_name + "_predictions.tsv");
  std::filesystem::create_directories(out.parent_path());
  write_text_file(out, set.to_tsv());
  std::cout << run_id << " " << split_name << " predictions -> " << out.string() << "\n";
}

void ensemble(const PipelineConfig& cfg, const std::string& name) {
  auto rule_it = cfg.ensembles.find(name);
  if (rule_it == cfg.ensembles.end()) throw ConfigError("ensemble not configured: " + name);
  const EnsembleRule& rule = rule_it->second;

  const auto registry = registry_by_id(cfg);
  std::vector<RankedRun> ranked;
  for (const auto& [id, entry] : registry) ranked.push_back(entry.ranked());

  EnsembleSpec spec;
  spec.ensemble_id = name;
  spec.members = ensemble_members(rule, ranked);

  const DataSplit dev_split = load_prepared_split(cfg, "dev");
  const Vocabulary vocab = load_prepared_vocab(cfg);
  const auto dev_sets = member_predictions(cfg, registry, spec.members, "dev", &dev_split, &vocab);
  const PredictionSet dev_avg = average(dev_sets);
  const std::vector<int> dev_labels = labels_for(dev_avg, labels_by_id(dev_split));
  const auto grid_values = cfg.thresholds();
  const ThresholdChoice choice = optimize_threshold(dev_avg, dev_labels, grid_values);
  spec.threshold = choice.threshold;

  const auto dir = cfg.out_dir / "ensembles" / name;
  std::filesystem::create_directories(dir);
  write_text_file(dir / "ensemble.json", spec.to_json());
  PredictionSet named_dev = dev_avg;
  named_dev.source_id = name;
  write_text_file(dir / "dev_predictions.tsv", named_dev.to_tsv());
  const MetricsReport dev_metrics = prf1(apply_threshold(dev_avg, choice.threshold), dev_labels);
  write_text_file(dir / "dev_metrics.json", dev_metrics.to_json());
  std::cout << name << ": " << spec.members.size() << " members, threshold "
            << format_double(choice.threshold) << ", dev F1 " << format_double(dev_metrics.f1)
            << "\n";

  if (std::filesystem::exists(prepared_split_path(cfg, "test"))) {
    const DataSplit test_split = load_prepared_split(cfg, "test");
    const auto test_sets =
        member_predictions(cfg, registry, spec.members, "test", &test_split, &vocab);
    PredictionSet test_avg = average(test_sets);
    test_avg.source_id = name;
    write_text_file(dir / "test_predictions.tsv", test_avg.to_tsv());
    if (test_split.has_labels()) {
      const std::vector<int> test_labels = labels_for(test_avg, labels_by_id(test_split));
      const MetricsReport test_metrics =
          prf1(apply_threshold(test_avg, choice.threshold), test_labels);
      write_text_file(dir / "test_metrics.json", test_metrics.to_json());
      std::cout << name << ": test F1 " << format_double(test_metrics.f1) << "\n";
    } else {
      std::cout << name << ": test split unlabeled, wrote predictions only\n";
    }
  }
}

void sweep(const PipelineConfig& cfg, std::optional<int> n_max_override) {
  const auto registry = registry_by_id(cfg);
  std::vector<RankedRun> ranked;
  for (const auto& [id, entry] : registry) ranked.push_back(entry.ranked());

  const DataSplit dev_split = load_prepared_split(cfg, "dev");
  const Vocabulary vocab = load_prepared_vocab(cfg);
  std::vector<std::string> all_ids;
  for (const auto& run : ranked) all_ids.push_back(run.run_id);
  const auto sets = member_predictions(cfg, registry, all_ids, "dev", &dev_split, &vocab);
  std::unordered_map<std::string, PredictionSet> dev_sets;
  for (std::size_t i = 0; i < all_ids.size(); ++i) dev_sets.emplace(all_ids[i], sets[i]);

  SweepOptions options;
  options.retune_threshold = cfg.sweep.retune_threshold;
  options.frozen_threshold = cfg.sweep.frozen_threshold;
  const int n_max = n_max_override.value_or(cfg.sweep.n_max);
  const auto points = ensemble_sweep(ranked, n_max, dev_sets, labels_by_id(dev_split),
                                     cfg.thresholds(), options);

  const auto dir = cfg.out_dir / "sweep";
  std::filesystem::create_directories(dir);
  write_text_file(dir / "sweep.csv", sweep_to_csv(points));
  write_text_file(dir / "sweep.svg", render_sweep_svg(points));
  std::cout << "sweep: " << points.size() << " points -> " << (dir / "sweep.csv").string() << "\n";
}

void analyze(const PipelineConfig& cfg, const std::string& source, const std::string& split_name,
             std::optional<double> threshold_override) {
  const DataSplit split = load_prepared_split(cfg, split_name);
  if (!split.has_labels())
    throw LabelError("split '" + split_name + "' has no gold labels; cannot analyze errors");

  std::filesystem::path pred_path;
  std::optional<double> stored_threshold;
  if (cfg.ensembles.count(source)) {
    const auto dir = cfg.out_dir / "ensembles" / source;
    pred_path = dir / (split_name + "_predictions.tsv");
    const auto spec_path = dir / "ensemble.json";
    if (std::filesystem::exists(spec_path)) {
      const auto j = nlohmann::json::parse(read_text_file(spec_path));
      if (j.contains("threshold") && !j["threshold"].is_null())
        stored_threshold = j["threshold"].get<double>();
    }
  } else {
    pred_path = cfg.run_dir(source) / (split_name + "_predictions.tsv");
  }
  const PredictionSet set = load_prediction_tsv(pred_path, source, split_name);
  const double threshold = threshold_override.value_or(stored_threshold.value_or(0.5));

  // Reorder probabilities into split record order.
  std::unordered_map<std::string, double> by_id;
  for (const auto& [id, p] : set.entries) by_id.emplace(id, p);
  std::vector<double> probs;
  std::vector<int> preds;
  probs.reserve(split.records.size());
  for (const auto& rec : split.records) {
    auto it = by_id.find(rec.par_id);
    if (it == by_id.end())
      throw AlignmentError("no prediction for par_id " + rec.par_id + " in " + pred_path.string());
    probs.push_back(it->second);
    preds.push_back(it->second >= threshold ? 1 : 0);
  }

  const ErrorBreakdown breakdown = error_by_keyword(preds, split.records);
  const auto dir = cfg.out_dir / "analysis" / source / split_name;
  std::filesystem::create_directories(dir);
  write_text_file(dir / "error_breakdown.csv", breakdown.to_csv());
  write_text_file(dir / "false_positives.tsv",
                  export_errors(preds, probs, split.records, threshold, ErrorKind::FalsePositive));
  write_text_file(dir / "false_negatives.tsv",
                  export_errors(preds, probs, split.records, threshold, ErrorKind::FalseNegative));
  std::cout << "analyze " << source << " on " << split_name << ": " << breakdown.global_fp
            << " FP, " << breakdown.global_fn << " FN -> " << dir.string() << "\n";
}

void report(const PipelineConfig& cfg) {
  const auto entries = load_registry(cfg.registry_path());
  if (entries.empty()) throw SelectionError("registry is empty; train the grid first");
  const DataSplit dev_split = load_prepared_split(cfg, "dev");
  const Vocabulary vocab = load_prepared_vocab(cfg);
  const auto dev_labels_map = labels_by_id(dev_split);
  const auto registry = registry_by_id(cfg);

  // Per-family decision threshold: config override, else tuned on the dev
  // predictions of the family's best run.
  std::map<std::string, double> family_threshold;
  const auto grid_values = cfg.thresholds();
  for (const char* family : {"cnn", "bilstm", "transformer"}) {
    auto override_it = cfg.report_thresholds.find(family);
    if (override_it != cfg.report_thresholds.end()) {
      family_threshold[family] = override_it->second;
      continue;
    }
    const RegistryEntry* best = nullptr;
    for (const auto& entry : entries)
      if (to_string(entry.family) == family && (!best || entry.best_dev_f1 > best->best_dev_f1 ||
                                                (entry.best_dev_f1 == best->best_dev_f1 &&
                                                 entry.run_id < best->run_id)))
        best = &entry;
    if (!best) continue;
    const auto sets = member_predictions(cfg, registry, {best->run_id}, "dev", &dev_split, &vocab);
    const auto labels = labels_for(sets[0], dev_labels_map);
    family_threshold[family] = optimize_threshold(sets[0], labels, grid_values).threshold;
  }

  // Group runs for the summary table: embedding alias for cnn/bilstm, step size
  // the transformer; macro-average per-run metrics at the family threshold.
  std::map<std::string, std::vector<MetricsReport>> groups;
  std::map<std::string, MetricsReport> per_run;
  for (const auto& entry : entries) {
    const std::string family = to_string(entry.family);
    const auto sets = member_predictions(cfg, registry, {entry.run_id}, "dev", &dev_split, &vocab);
    const auto labels = labels_for(sets[0], dev_labels_map);
    const MetricsReport m =
        prf1(apply_threshold(sets[0], family_threshold.at(family)), labels);
    per_run[entry.run_id] = m;
    const std::string group =
        entry.family == Family::Transformer
            ? family + "/step_size=" + std::to_string(entry.spec.schedule.step_size)
            : family + "/" + entry.spec.embedding_alias;
    groups[group].push_back(m);
  }

  nlohmann::json out;
  std::ostringstream csv;
  csv << "group,runs,avg_precision,avg_recall,avg_f1\n";
  for (const auto& [group, reports] : groups) {
    const MacroMetrics macro = macro_average(reports);
    out["groups"][group] = {{"runs", reports.size()},
                            {"avg_precision", macro.precision},
                            {"avg_recall", macro.recall},
                            {"avg_f1", macro.f1}};
    csv << group << "," << reports.size() << "," << format_double(macro.precision) << ","
        << format_double(macro.recall) << "," << format_double(macro.f1) << "\n";
  }
  for (const auto& [family, threshold] : family_threshold)
    out["thresholds"][family] = threshold;
  for (const auto& [run_id, m] : per_run)
    out["runs"][run_id] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};

  const auto dir = cfg.out_dir / "report";
  std::filesystem::create_directories(dir);
  write_text_file(dir / "report.json", out.dump(2) + "\n");
  write_text_file(dir / "report.csv", csv.str());
  std::cout << "report: " << groups.size() << " groups -> " << (dir / "report.json").string()
            << "\n";
}

void make_encoder(const MakeEncoderOptions& options) {
  if (options.out.empty()) throw ConfigError("make-encoder needs --out");
  std::vector<std::string> texts;
  if (!options.from_tsv.empty()) {
    TsvSchema schema;
    schema.header = options.header;
    schema.label = -1;  // tolerate unlabeled corpora
    for (const auto& rec : load_task_tsv(options.from_tsv, schema, 2)) texts.push_back(rec.text);
  }
  if (texts.empty())
    throw ConfigError("make-encoder needs --from-tsv with at least one text row");
  if (options.out.has_parent_path()) std::filesystem::create_directories(options.out.parent_path());
  write_miniature_encoder(options.out, options.encoder_id, texts, options.dim, options.heads,
                          options.layers, options.ff_dim, options.max_positions,
                          options.max_whole_words, options.seed);
  std::cout << "encoder '" << options.encoder_id << "' -> " << options.out.string() << "\n";
}

}  // namespace pcl::commands
