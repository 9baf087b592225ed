#include "pcl/config.hpp"

#include <cstdlib>
#include <nlohmann/json.hpp>

#include "pcl/errors.hpp"
#include "pcl/io_util.hpp"

namespace pcl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config error at " + path + ": " + what);
}

const json& member(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(path + "/" + key, "missing required key");
  return *it;
}

template <typename T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    fail(path, "wrong type");
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get_as<T>(j.at(key), path + "/" + key);
}

TsvSchema parse_schema(const json& j, const std::string& path) {
  TsvSchema s;
  s.par_id = get_or(j, "par_id", path, 0);
  s.art_id = get_or(j, "art_id", path, 1);
  s.keyword = get_or(j, "keyword", path, 2);
  s.country_code = get_or(j, "country_code", path, 3);
  s.text = get_or(j, "text", path, 4);
  s.label = get_or(j, "label", path, 5);
  s.header = get_or(j, "header", path, false);
  return s;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

FamilyGrid parse_family_grid(const json& j, Family family, const std::string& path) {
  FamilyGrid fg;
  fg.enabled = get_or(j, "enabled", path, true);
  fg.seeds = get_or(j, "seeds", path, std::vector<std::uint64_t>{0, 1, 2});
  fg.base_lr = get_or(j, "base_lr", path, family == Family::Transformer ? 2e-5 : 3e-4);
  fg.gamma = get_or(j, "gamma", path, 0.5);
  fg.max_epochs = get_or(j, "max_epochs", path, family == Family::Transformer ? 20 : 35);
  fg.batch_size = get_or(j, "batch_size", path, family == Family::Transformer ? 8 : 32);
  switch (family) {
    case Family::Cnn:
      fg.embeddings = get_as<std::vector<std::string>>(member(j, "embeddings", path),
                                                       path + "/embeddings");
      fg.cnn.filter_widths = get_or(j, "filter_widths", path, std::vector<int>{2, 3, 4});
      fg.cnn.filters_per_width = get_or(j, "filters_per_width", path, 2);
      fg.cnn.dropout_rate = get_or(j, "dropout_rate", path, 0.5);
      break;
    case Family::Bilstm:
      fg.embeddings = get_as<std::vector<std::string>>(member(j, "embeddings", path),
                                                       path + "/embeddings");
      fg.bilstm.hidden_size = get_or(j, "hidden_size", path, 256);
      fg.bilstm.dropout_rate = get_or(j, "dropout_rate", path, 0.0);
      break;
    case Family::Transformer:
      fg.step_sizes = get_or(j, "step_sizes", path, std::vector<int>{2, 3});
      fg.transformer.encoder_id =
          get_as<std::string>(member(j, "encoder_id", path), path + "/encoder_id");
      fg.transformer.max_tokens = get_or(j, "max_tokens", path, 512);
      break;
  }
  return fg;
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw InputError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config error at /: expected an object");

  PipelineConfig cfg;
  cfg.config_dir = std::filesystem::absolute(path).parent_path();
  cfg.seed = get_or(j, "seed", "", std::uint64_t{1234});
  cfg.out_dir = resolve(cfg.config_dir, get_or<std::string>(j, "out_dir", "", "out"));
  cfg.cutoff = get_or(j, "cutoff", "", 2);
  if (cfg.cutoff < 1 || cfg.cutoff > 4) fail("/cutoff", "must be in 1..4");

  const json& ds = member(j, "dataset", "");
  if (ds.contains("schema")) cfg.dataset.schema = parse_schema(ds["schema"], "/dataset/schema");
  if (ds.contains("test_schema"))
    cfg.dataset.test_schema = parse_schema(ds["test_schema"], "/dataset/test_schema");
  if (ds.contains("tsv")) {
    cfg.dataset.tsv = resolve(cfg.config_dir, get_as<std::string>(ds["tsv"], "/dataset/tsv"));
    cfg.dataset.use_split_config = true;
    const json& sp = member(ds, "splits", "/dataset");
    const std::string mode = get_as<std::string>(member(sp, "mode", "/dataset/splits"),
                                                 "/dataset/splits/mode");
    if (mode == "explicit") {
      cfg.dataset.splits.mode = SplitConfig::Mode::Explicit;
      for (const char* name : {"train", "dev", "test"}) {
        const std::string key = std::string(name) + "_ids";
        if (!sp.contains(key)) continue;
        const auto ids_path =
            resolve(cfg.config_dir, get_as<std::string>(sp[key], "/dataset/splits/" + key));
        if (!std::filesystem::exists(ids_path))
          throw InputError("split id file not found: " + ids_path.string());
        cfg.dataset.splits.id_lists[name] = read_lines(ids_path);
        auto& ids = cfg.dataset.splits.id_lists[name];
        std::erase_if(ids, [](const std::string& s) { return trim(s).empty(); });
        for (auto& id : ids) id = trim(id);
      }
      if (cfg.dataset.splits.id_lists.empty())
        fail("/dataset/splits", "explicit mode needs at least one *_ids file");
    } else if (mode == "stratified") {
      cfg.dataset.splits.mode = SplitConfig::Mode::Stratified;
      const json& fr = member(sp, "fractions", "/dataset/splits");
      for (auto it = fr.begin(); it != fr.end(); ++it)
        cfg.dataset.splits.fractions[it.key()] =
            get_as<double>(it.value(), "/dataset/splits/fractions/" + it.key());
      cfg.dataset.splits.seed = get_or(sp, "seed", "/dataset/splits", cfg.seed);
    } else {
      fail("/dataset/splits/mode", "must be 'explicit' or 'stratified'");
    }
  } else {
    for (const char* name : {"train_tsv", "dev_tsv", "test_tsv"}) {
      if (!ds.contains(name)) {
        if (std::string(name) != "test_tsv")
          fail(std::string("/dataset/") + name, "missing (give 'tsv' + 'splits', or per-split files)");
        continue;
      }
      const auto p = resolve(cfg.config_dir, get_as<std::string>(ds[name], std::string("/dataset/") + name));
      if (std::string(name) == "train_tsv") cfg.dataset.train_tsv = p;
      if (std::string(name) == "dev_tsv") cfg.dataset.dev_tsv = p;
      if (std::string(name) == "test_tsv") cfg.dataset.test_tsv = p;
    }
  }

  const json text_prep = j.value("text_prep", json::object());
  cfg.max_len = get_or(text_prep, "max_len", "/text_prep", 256);
  cfg.min_freq = get_or(text_prep, "min_freq", "/text_prep", 1);
  if (cfg.max_len < 1) fail("/text_prep/max_len", "must be >= 1");
  if (cfg.min_freq < 1) fail("/text_prep/min_freq", "must be >= 1");

  if (j.contains("embeddings")) {
    const json& embs = j["embeddings"];
    if (!embs.is_object()) fail("/embeddings", "expected an object of alias -> {path, format}");
    for (auto it = embs.begin(); it != embs.end(); ++it) {
      const std::string p = "/embeddings/" + it.key();
      EmbeddingSource src;
      src.path = resolve(cfg.config_dir, get_as<std::string>(member(it.value(), "path", p), p + "/path"));
      src.format = embedding_format_from_name(
          get_as<std::string>(member(it.value(), "format", p), p + "/format"));
      cfg.embeddings.emplace(it.key(), std::move(src));
    }
  }

  cfg.encoder_cache = resolve(cfg.config_dir, get_or<std::string>(j, "encoder_cache", "", "encoders"));
  if (const char* env = std::getenv("PCL_ENCODER_CACHE"); env && *env)
    cfg.encoder_cache = env;

  const json& grid = member(j, "grid", "");
  if (grid.contains("cnn")) cfg.grid.cnn = parse_family_grid(grid["cnn"], Family::Cnn, "/grid/cnn");
  if (grid.contains("bilstm"))
    cfg.grid.bilstm = parse_family_grid(grid["bilstm"], Family::Bilstm, "/grid/bilstm");
  if (grid.contains("transformer"))
    cfg.grid.transformer =
        parse_family_grid(grid["transformer"], Family::Transformer, "/grid/transformer");
  cfg.grid.cnn.cnn.max_len = cfg.max_len;
  cfg.grid.bilstm.bilstm.max_len = cfg.max_len;

  // Every embedding alias the grid references must be configured.
  for (const FamilyGrid* fg : {&cfg.grid.cnn, &cfg.grid.bilstm}) {
    if (!fg->enabled) continue;
    for (const auto& alias : fg->embeddings)
      if (!cfg.embeddings.count(alias))
        fail("/embeddings/" + alias, "alias referenced by the grid but not configured");
  }

  if (j.contains("threshold_grid")) {
    const json& tg = j["threshold_grid"];
    cfg.threshold_grid.start = get_or(tg, "start", "/threshold_grid", 0.05);
    cfg.threshold_grid.stop = get_or(tg, "stop", "/threshold_grid", 0.95);
    cfg.threshold_grid.step = get_or(tg, "step", "/threshold_grid", 0.05);
  }

  if (j.contains("ensembles")) {
    const json& ens = j["ensembles"];
    if (!ens.is_object()) fail("/ensembles", "expected an object of name -> rule");
    for (auto it = ens.begin(); it != ens.end(); ++it) {
      const std::string p = "/ensembles/" + it.key();
      EnsembleRule rule;
      rule.name = it.key();
      rule.rule = get_or<std::string>(it.value(), "rule", p, "top_n");
      if (rule.rule != "top_n" && rule.rule != "top_n_plus_families")
        fail(p + "/rule", "must be 'top_n' or 'top_n_plus_families'");
      rule.n = get_or(it.value(), "n", p, 5);
      if (rule.n < 1) fail(p + "/n", "must be >= 1");
      if (it.value().contains("family"))
        rule.family = get_as<std::string>(it.value()["family"], p + "/family");
      if (it.value().contains("extra")) {
        const json& extra = it.value()["extra"];
        if (!extra.is_object()) fail(p + "/extra", "expected family -> count");
        for (auto e = extra.begin(); e != extra.end(); ++e) {
          family_from_name(e.key());  // validates the name
          rule.extra[e.key()] = get_as<int>(e.value(), p + "/extra/" + e.key());
        }
      }
      cfg.ensembles.emplace(rule.name, std::move(rule));
    }
  }

  if (j.contains("sweep")) {
    const json& sw = j["sweep"];
    cfg.sweep.n_max = get_or(sw, "n_max", "/sweep", 30);
    cfg.sweep.retune_threshold = get_or(sw, "retune_threshold", "/sweep", true);
    cfg.sweep.frozen_threshold = get_or(sw, "frozen_threshold", "/sweep", 0.35);
    if (cfg.sweep.n_max < 1) fail("/sweep/n_max", "must be >= 1");
  }

  if (j.contains("report") && j["report"].contains("thresholds")) {
    const json& th = j["report"]["thresholds"];
    for (auto it = th.begin(); it != th.end(); ++it) {
      family_from_name(it.key());
      cfg.report_thresholds[it.key()] = get_as<double>(it.value(), "/report/thresholds/" + it.key());
    }
  }
  return cfg;
}

std::filesystem::path PipelineConfig::encoder_archive(const std::string& encoder_id) const {
  return encoder_cache / (encoder_id + ".pclenc");
}

std::vector<double> PipelineConfig::thresholds() const {
  return make_threshold_grid(threshold_grid.start, threshold_grid.stop, threshold_grid.step);
}

}  // namespace pcl
