#include "pcl/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "pcl/checkpoint.hpp"
#include "pcl/errors.hpp"
#include "pcl/io_util.hpp"

namespace pcl {

Family family_from_name(const std::string& name) {
  if (name == "cnn") return Family::Cnn;
  if (name == "bilstm") return Family::Bilstm;
  if (name == "transformer") return Family::Transformer;
  throw ConfigError("unknown family '" + name + "' (cnn | bilstm | transformer)");
}

std::string to_string(Family family) {
  switch (family) {
    case Family::Cnn: return "cnn";
    case Family::Bilstm: return "bilstm";
    case Family::Transformer: return "transformer";
  }
  return "?";
}

double LrSchedule::lr_at(int epoch, double base_lr) const {
  return kind == Kind::Constant ? base_lr : stepwise_lr(epoch, base_lr, step_size, gamma);
}

nlohmann::json TrainRunSpec::to_json() const {
  nlohmann::json j{{"run_id", run_id},
                   {"family", to_string(family)},
                   {"seed", seed},
                   {"base_lr", base_lr},
                   {"max_epochs", max_epochs},
                   {"batch_size", batch_size}};
  if (schedule.kind == LrSchedule::Kind::Constant) {
    j["schedule"] = {{"kind", "constant"}};
  } else {
    j["schedule"] = {{"kind", "stepwise"},
                     {"step_size", schedule.step_size},
                     {"gamma", schedule.gamma}};
  }
  switch (family) {
    case Family::Cnn:
      j["embedding"] = embedding_alias;
      j["cnn"] = {{"filter_widths", cnn.filter_widths},
                  {"filters_per_width", cnn.filters_per_width},
                  {"dropout_rate", cnn.dropout_rate},
                  {"max_len", cnn.max_len}};
      break;
    case Family::Bilstm:
      j["embedding"] = embedding_alias;
      j["bilstm"] = {{"hidden_size", bilstm.hidden_size},
                     {"dropout_rate", bilstm.dropout_rate},
                     {"max_len", bilstm.max_len}};
      break;
    case Family::Transformer:
      j["transformer"] = {{"encoder_id", transformer.encoder_id},
                          {"max_tokens", transformer.max_tokens}};
      break;
  }
  return j;
}

TrainRunSpec TrainRunSpec::from_json(const nlohmann::json& j) {
  TrainRunSpec spec;
  spec.run_id = j.at("run_id").get<std::string>();
  spec.family = family_from_name(j.at("family").get<std::string>());
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.base_lr = j.at("base_lr").get<double>();
  spec.max_epochs = j.at("max_epochs").get<int>();
  spec.batch_size = j.at("batch_size").get<int>();
  const auto& sched = j.at("schedule");
  if (sched.at("kind").get<std::string>() == "constant") {
    spec.schedule.kind = LrSchedule::Kind::Constant;
  } else {
    spec.schedule.kind = LrSchedule::Kind::Stepwise;
    spec.schedule.step_size = sched.at("step_size").get<int>();
    spec.schedule.gamma = sched.at("gamma").get<double>();
  }
  spec.embedding_alias = j.value("embedding", "");
  if (j.contains("cnn")) {
    const auto& c = j["cnn"];
    spec.cnn.filter_widths = c.at("filter_widths").get<std::vector<int>>();
    spec.cnn.filters_per_width = c.at("filters_per_width").get<int>();
    spec.cnn.dropout_rate = c.at("dropout_rate").get<double>();
    spec.cnn.max_len = c.at("max_len").get<int>();
  }
  if (j.contains("bilstm")) {
    const auto& b = j["bilstm"];
    spec.bilstm.hidden_size = b.at("hidden_size").get<int>();
    spec.bilstm.dropout_rate = b.at("dropout_rate").get<double>();
    spec.bilstm.max_len = b.at("max_len").get<int>();
  }
  if (j.contains("transformer")) {
    const auto& t = j["transformer"];
    spec.transformer.encoder_id = t.at("encoder_id").get<std::string>();
    spec.transformer.max_tokens = t.at("max_tokens").get<int>();
  }
  return spec;
}

std::unique_ptr<Classifier> build_model(const TrainRunSpec& spec, const TrainEnv& env) {
  switch (spec.family) {
    case Family::Cnn:
    case Family::Bilstm: {
      if (!env.vocab) throw ConfigError("cnn/bilstm training needs a vocabulary");
      std::mt19937_64 oov_rng(mix_seed(spec.seed, 2));
      EmbeddingTable table =
          env.embedding_path.empty()
              ? EmbeddingTable::random(env.random_embedding_dim, *env.vocab, oov_rng)
              : EmbeddingTable::load(env.embedding_path, env.embedding_format, *env.vocab, oov_rng);
      if (spec.family == Family::Cnn)
        return std::make_unique<CnnModel>(spec.cnn, *env.vocab, table, spec.seed);
      return std::make_unique<BilstmModel>(spec.bilstm, *env.vocab, table, spec.seed);
    }
    case Family::Transformer:
      return TransformerModel::from_encoder_archive(env.encoder_archive,
                                                    spec.transformer.max_tokens, spec.seed);
  }
  throw ConfigError("unreachable family");
}

namespace {

void restore_params(ParameterStore& dst, const ParameterStore& src) {
  if (dst.tensors().size() != src.tensors().size())
    throw FormatError("checkpoint tensor count mismatch");
  for (const auto& tensor : src.tensors()) {
    auto& target = dst.get(tensor.name);
    if (target.value.rows() != tensor.value.rows() || target.value.cols() != tensor.value.cols())
      throw FormatError("checkpoint tensor shape mismatch for " + tensor.name);
    target.value = tensor.value;
  }
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::unique_ptr<Classifier> load_model_from_checkpoint(
    const std::filesystem::path& checkpoint, const Vocabulary* vocab,
    const std::filesystem::path& encoder_archive) {
  ParameterStore saved;
  Archive archive = Archive::load(checkpoint, saved);
  const auto& meta = archive.meta();
  if (meta.value("kind", "") != "checkpoint")
    throw FormatError("archive is not a checkpoint: " + checkpoint.string());
  TrainRunSpec spec = TrainRunSpec::from_json(meta.at("spec"));

  TrainEnv env;
  env.vocab = vocab;
  env.encoder_archive = encoder_archive;
  env.random_embedding_dim = meta.value("embedding_dim", 0);
  if (spec.family != Family::Transformer) {
    if (!vocab) throw ConfigError("cnn/bilstm checkpoints need the prepared vocabulary");
    const std::string want = meta.value("vocab_hash", "");
    if (want != hash_hex(vocab->hash()))
      throw InputError("vocabulary hash mismatch for checkpoint " + checkpoint.string() +
                       " (expected " + want + ", prepared vocabulary is " +
                       hash_hex(vocab->hash()) + ")");
  }
  auto model = build_model(spec, env);
  restore_params(model->params(), saved);
  return model;
}

PredictionSet predict(Classifier& model, const DataSplit& split, const std::string& source_id) {
  auto data = model.encode_records(split.records);
  PredictionSet set;
  set.source_id = source_id;
  set.split = split.name;
  const int total = static_cast<int>(split.records.size());
  constexpr int kEvalBatch = 64;
  for (int start = 0; start < total; start += kEvalBatch) {
    const int count = std::min(kEvalBatch, total - start);
    std::vector<int> index(static_cast<std::size_t>(count));
    std::iota(index.begin(), index.end(), start);
    const Eigen::MatrixXd probs = model.forward(*data, index, Mode::Eval);
    for (int i = 0; i < count; ++i)
      set.entries.push_back(
          {split.records[static_cast<std::size_t>(start + i)].par_id, probs(i, 1)});
  }
  return set;
}

TrainedModelRecord train(const TrainRunSpec& spec, const DataSplit& train_split,
                         const DataSplit& dev_split, const TrainEnv& env) {
  if (spec.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (spec.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (dev_split.records.empty()) throw ConfigError("dev split is empty");
  if (train_split.records.empty()) throw ConfigError("train split is empty");
  const std::vector<int> train_labels = train_split.binary_labels();
  const std::vector<int> dev_labels = dev_split.binary_labels();

  auto model = build_model(spec, env);
  auto train_data = model->encode_records(train_split.records);
  auto dev_data = model->encode_records(dev_split.records);
  Adam adam(model->params());
  std::mt19937_64 shuffle_rng(mix_seed(spec.seed, 3));

  std::filesystem::create_directories(env.run_dir);
  const auto checkpoint_path = env.run_dir / "checkpoint.bin";
  const auto dev_pred_path = env.run_dir / "dev_predictions.tsv";

  TrainedModelRecord record;
  record.run_id = spec.run_id;
  record.spec = spec;
  record.param_count = model->params().count_parameters();
  record.checkpoint_path = checkpoint_path;
  record.dev_predictions_path = dev_pred_path;

  std::vector<int> order(train_split.records.size());
  std::iota(order.begin(), order.end(), 0);
  PredictionSet best_dev_predictions;
  double best_f1 = -1;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= spec.max_epochs; ++epoch) {
    const double lr = spec.schedule.lr_at(epoch, spec.base_lr);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(spec.batch_size)) {
      const std::size_t count =
          std::min<std::size_t>(static_cast<std::size_t>(spec.batch_size), order.size() - start);
      std::vector<int> index(order.begin() + static_cast<long>(start),
                             order.begin() + static_cast<long>(start + count));
      std::vector<int> labels(count);
      for (std::size_t i = 0; i < count; ++i)
        labels[i] = train_labels[static_cast<std::size_t>(index[i])];

      model->params().zero_grad();
      double loss = 0;
      try {
        loss = model->forward_backward(*train_data, index, labels);
      } catch (const NumericError& e) {
        throw NumericError("run " + spec.run_id + " aborted at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batches) + ": " + e.what());
      }
      if (!std::isfinite(loss))
        throw NumericError("non-finite loss in run " + spec.run_id + " at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(batches));
      adam.step(model->params(), lr);
      loss_sum += loss;
      ++batches;
    }

    // Dev metrics at threshold 0.5: model selection only; tuned thresholds
    // are applied downstream by the ensemble module.
    PredictionSet dev_pred = predict(*model, dev_split, spec.run_id);
    std::vector<int> dev_hat;
    dev_hat.reserve(dev_pred.entries.size());
    for (const auto& [id, p] : dev_pred.entries) dev_hat.push_back(p >= 0.5 ? 1 : 0);
    const MetricsReport report = prf1(dev_hat, dev_labels);

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / std::max(batches, 1);
    stats.dev_precision = report.precision;
    stats.dev_recall = report.recall;
    stats.dev_f1 = report.f1;
    record.per_epoch.push_back(stats);
    if (!env.quiet)
      std::cerr << spec.run_id << " epoch " << epoch << " loss " << stats.train_loss << " dev_f1 "
                << stats.dev_f1 << "\n";

    if (report.f1 > best_f1) {
      best_f1 = report.f1;
      best_epoch = epoch;
      best_dev_predictions = dev_pred;

      Archive archive;
      nlohmann::json meta{{"kind", "checkpoint"},
                          {"run_id", spec.run_id},
                          {"family", to_string(spec.family)},
                          {"spec", spec.to_json()},
                          {"epoch", epoch},
                          {"dev_f1", report.f1}};
      if (spec.family == Family::Transformer) {
        meta["encoder_id"] = spec.transformer.encoder_id;
      } else {
        meta["vocab_hash"] = hash_hex(env.vocab->hash());
        meta["embedding_dim"] =
            static_cast<int>(model->params().get("embedding").value.cols());
      }
      archive.meta() = meta;
      archive.save(checkpoint_path, model->params());
    }
  }

  record.best_epoch = best_epoch;
  record.best_dev_f1 = best_f1;

  std::ostringstream epochs_csv;
  epochs_csv << "epoch,train_loss,dev_precision,dev_recall,dev_f1\n";
  for (const auto& s : record.per_epoch)
    epochs_csv << s.epoch << "," << format_double(s.train_loss) << ","
               << format_double(s.dev_precision) << "," << format_double(s.dev_recall) << ","
               << format_double(s.dev_f1) << "\n";
  write_text_file(env.run_dir / "epochs.csv", epochs_csv.str());
  write_text_file(env.run_dir / "spec.json", spec.to_json().dump(2) + "\n");
  write_text_file(dev_pred_path, best_dev_predictions.to_tsv());
  return record;
}

std::vector<TrainRunSpec> expand_grid(const GridConfig& grid) {
  std::vector<TrainRunSpec> specs;
  auto check_duplicates = [&specs]() {
    std::set<std::string> ids;
    for (const auto& s : specs)
      if (!ids.insert(s.run_id).second) throw ConfigError("duplicate run_id: " + s.run_id);
  };

  for (const FamilyGrid* fg : {&grid.cnn, &grid.bilstm}) {
    if (!fg->enabled) continue;
    const bool is_cnn = fg == &grid.cnn;
    for (const auto& alias : fg->embeddings) {
      for (std::uint64_t seed : fg->seeds) {
        TrainRunSpec spec;
        spec.family = is_cnn ? Family::Cnn : Family::Bilstm;
        spec.run_id = to_string(spec.family) + "_" + alias + "_s" + std::to_string(seed);
        spec.seed = seed;
        spec.base_lr = fg->base_lr;
        spec.schedule.kind = LrSchedule::Kind::Constant;
        spec.max_epochs = fg->max_epochs;
        spec.batch_size = fg->batch_size;
        spec.embedding_alias = alias;
        spec.cnn = fg->cnn;
        spec.bilstm = fg->bilstm;
        specs.push_back(std::move(spec));
      }
    }
  }
  if (grid.transformer.enabled) {
    const auto& fg = grid.transformer;
    for (int step_size : fg.step_sizes) {
      for (std::uint64_t seed : fg.seeds) {
        TrainRunSpec spec;
        spec.family = Family::Transformer;
        spec.run_id = "transformer_ss" + std::to_string(step_size) + "_s" + std::to_string(seed);
        spec.seed = seed;
        spec.base_lr = fg.base_lr;
        spec.schedule.kind = LrSchedule::Kind::Stepwise;
        spec.schedule.step_size = step_size;
        spec.schedule.gamma = fg.gamma;
        spec.max_epochs = fg.max_epochs;
        spec.batch_size = fg.batch_size;
        spec.transformer = fg.transformer;
        specs.push_back(std::move(spec));
      }
    }
  }
  check_duplicates();
  return specs;
}

void append_registry(const std::filesystem::path& path, const TrainedModelRecord& record) {
  nlohmann::json j{{"run_id", record.run_id},
                   {"family", to_string(record.spec.family)},
                   {"seed", record.spec.seed},
                   {"best_epoch", record.best_epoch},
                   {"best_dev_f1", record.best_dev_f1},
                   {"param_count", record.param_count},
                   {"checkpoint", record.checkpoint_path.string()},
                   {"dev_predictions", record.dev_predictions_path.string()},
                   {"spec", record.spec.to_json()}};
  append_line_locked(path, j.dump());
}

std::vector<RegistryEntry> load_registry(const std::filesystem::path& path) {
  std::vector<RegistryEntry> entries;
  if (!std::filesystem::exists(path)) return entries;
  std::set<std::string> ids;
  for (const auto& line : read_lines(path)) {
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("corrupt registry line: " + std::string(e.what()));
    }
    RegistryEntry entry;
    entry.run_id = j.at("run_id").get<std::string>();
    entry.family = family_from_name(j.at("family").get<std::string>());
    entry.seed = j.at("seed").get<std::uint64_t>();
    entry.best_epoch = j.at("best_epoch").get<int>();
    entry.best_dev_f1 = j.at("best_dev_f1").get<double>();
    entry.param_count = j.value("param_count", 0L);
    entry.checkpoint = j.at("checkpoint").get<std::string>();
    entry.dev_predictions = j.at("dev_predictions").get<std::string>();
    entry.spec = TrainRunSpec::from_json(j.at("spec"));
    if (!ids.insert(entry.run_id).second)
      throw FormatError("duplicate run_id in registry: " + entry.run_id);
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace pcl
