#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pcl/embedding.hpp"
#include "pcl/config.hpp"
#include "pcl/ensemble.hpp"
#include "pcl/io_util.hpp"
#include "support.hpp"

using namespace pcl;
using pcl::test::TempDir;
using nlohmann::json;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

CmdResult run_cmd(const std::string& args) {
  const std::string command = std::string(PCL_BINARY) + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult result;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) result.output.append(buf, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string fixture_corpus(int rows, bool labeled, int id_offset = 0) {
  const std::vector<std::string> pos_texts = {
      "a donation of one dollar can save a life today",
      "these poor souls deserve our pity and charity",
      "we must save a life and rescue the helpless",
      "pity the helpless, a small gift can save a life",
  };
  const std::vector<std::string> neg_texts = {
      "the council approved a new housing budget",
      "local library extends weekend opening hours",
      "city transit schedule changes next month",
      "the weather service forecasts light rain",
  };
  const std::vector<std::string> keywords = {"homeless", "women"};
  std::ostringstream out;
  for (int i = 0; i < rows; ++i) {
    const int id = id_offset + i;
    const bool positive = i % 3 == 0;  // roughly a third positive
    const auto& text = positive ? pos_texts[static_cast<std::size_t>(i / 3) % pos_texts.size()]
                                : neg_texts[static_cast<std::size_t>(i) % neg_texts.size()];
    char par_id[16];
    std::snprintf(par_id, sizeof(par_id), "p%04d", id);
    out << par_id << "\tart" << id << "\t" << keywords[static_cast<std::size_t>(id) % 2]
        << "\tus\t" << text;
    if (labeled) out << "\t" << (positive ? (i % 2 ? 3 : 4) : (i % 5 ? 0 : 1));
    out << "\n";
  }
  return out.str();
}

// Fixture workspace: corpus splits, four embedding aliases, config file.
struct Workspace {
  TempDir dir{"cli"};
  std::filesystem::path config_path;
  std::filesystem::path out_dir;

  Workspace() {
    // Train file with one empty-text row that prepare must drop and count.
    std::string train = fixture_corpus(36, true);
    train += "p9999\tart9999\thomeless\tus\t   \t4\n";
    pcl::test::write_file(dir.file("train.tsv"), train);
    pcl::test::write_file(dir.file("dev.tsv"), fixture_corpus(12, true, 100));
    pcl::test::write_file(dir.file("test.tsv"), fixture_corpus(10, false, 200));

    // Embedding fixtures over the corpus words.
    std::vector<std::pair<std::string, std::vector<float>>> entries;
    const std::vector<std::string> words = {"save",  "life", "pity",    "charity", "donation",
                                            "council", "city", "housing", "library", "weather",
                                            "schedule", "rain", "the",    "a",       "of"};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> unif(-0.2f, 0.2f);
    for (const auto& w : words) {
      std::vector<float> v(6);
      for (auto& x : v) x = unif(rng);
      entries.push_back({w, v});
    }
    pcl::test::write_file(dir.file("tiny.vec"), write_text_vec(entries, true));
    pcl::test::write_file(dir.file("tiny.bin"), write_word2vec_binary(entries));

    out_dir = dir.file("out");
    json cfg{
        {"seed", 1234},
        {"out_dir", "out"},
        {"cutoff", 2},
        {"dataset",
         {{"train_tsv", "train.tsv"},
          {"dev_tsv", "dev.tsv"},
          {"test_tsv", "test.tsv"},
          {"schema", {{"header", false}}},
          {"test_schema", {{"label", -1}}}}},
        {"text_prep", {{"max_len", 16}, {"min_freq", 1}}},
        {"embeddings",
         {{"tiny_w2v", {{"path", "tiny.bin"}, {"format", "word2vec-binary"}}},
          {"tiny_vec", {{"path", "tiny.vec"}, {"format", "text-vec"}}},
          {"tiny_vec2", {{"path", "tiny.vec"}, {"format", "text-vec"}}},
          {"tiny_vec3", {{"path", "tiny.vec"}, {"format", "text-vec"}}}}},
        {"encoder_cache", "encoders"},
        {"grid",
         {{"cnn",
           {{"seeds", {0, 1}},
            {"embeddings", {"tiny_w2v"}},
            {"base_lr", 1e-3},
            {"max_epochs", 6},
            {"batch_size", 8},
            {"dropout_rate", 0.5}}},
          {"bilstm",
           {{"seeds", {0}},
            {"embeddings", {"tiny_vec"}},
            {"hidden_size", 6},
            {"base_lr", 1e-3},
            {"max_epochs", 5},
            {"batch_size", 8}}},
          {"transformer",
           {{"seeds", {0}},
            {"step_sizes", {2}},
            {"encoder_id", "mini"},
            {"base_lr", 1e-3},
            {"max_epochs", 4},
            {"batch_size", 8},
            {"max_tokens", 32}}}}},
        {"ensembles",
         {{"ens_single", {{"rule", "top_n"}, {"n", 1}}},
          {"ens1", {{"rule", "top_n"}, {"n", 2}}},
          {"ens2",
           {{"rule", "top_n_plus_families"},
            {"n", 1},
            {"family", "transformer"},
            {"extra", {{"cnn", 1}, {"bilstm", 1}}}}},
          {"ens_toolarge", {{"rule", "top_n"}, {"n", 99}}}}},
        {"sweep", {{"n_max", 4}}},
    };
    config_path = dir.file("config.json");
    pcl::test::write_file(config_path, cfg.dump(2));
  }

  std::string cfg_arg() const { return "--config " + config_path.string(); }
};

std::string dir_digest(const std::filesystem::path& root) {
  std::map<std::string, std::uint64_t> hashes;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
    if (entry.is_regular_file())
      hashes[entry.path().string()] = fnv1a64(read_text_file(entry.path()));
  std::ostringstream out;
  for (const auto& [path, hash] : hashes) out << path << ":" << hash << "\n";
  return out.str();
}

}  // namespace

TEST_CASE("full pipeline: prepare, grid, ensemble, sweep, analyze, report") {
  Workspace ws;

  // make-encoder writes a loadable miniature encoder archive.
  auto enc = run_cmd("make-encoder --out " + ws.dir.file("encoders/mini.pclenc").string() +
                     " --id mini --from-tsv " + ws.dir.file("train.tsv").string() +
                     " --dim 16 --heads 2 --layers 1 --ff-dim 24 --max-positions 32 --seed 5");
  REQUIRE(enc.exit_code == 0);

  // prepare: splits + vocab + coverage, idempotent on rerun.
  auto prep = run_cmd("prepare " + ws.cfg_arg());
  REQUIRE(prep.exit_code == 0);
  CHECK(std::filesystem::exists(ws.out_dir / "prepared" / "train.tsv"));
  CHECK(std::filesystem::exists(ws.out_dir / "prepared" / "dev.tsv"));
  CHECK(std::filesystem::exists(ws.out_dir / "prepared" / "test.tsv"));
  CHECK(std::filesystem::exists(ws.out_dir / "prepared" / "vocab.txt"));

  const auto coverage = json::parse(read_text_file(ws.out_dir / "prepared" / "coverage.json"));
  CHECK(coverage.size() == 4);  // all configured aliases reported
  for (const auto& alias : {"tiny_w2v", "tiny_vec", "tiny_vec2", "tiny_vec3"}) {
    CHECK(coverage.contains(alias));
    CHECK(coverage[alias]["coverage"].get<double>() > 0.0);
  }
  const auto stats = json::parse(read_text_file(ws.out_dir / "prepared" / "prepare_stats.json"));
  CHECK(stats["rows_dropped_empty_text"].get<int>() == 1);
  CHECK_FALSE(stats["splits"]["test"]["labeled"].get<bool>());

  const std::string digest_before = dir_digest(ws.out_dir / "prepared");
  REQUIRE(run_cmd("prepare " + ws.cfg_arg()).exit_code == 0);
  CHECK(dir_digest(ws.out_dir / "prepared") == digest_before);  // byte-identical rerun

  // grid with subprocess fan-out: 4 desk-scale runs -> 4 registry lines.
  auto grid = run_cmd("grid " + ws.cfg_arg() + " --jobs 2 --resume");
  REQUIRE(grid.exit_code == 0);
  auto registry_lines = read_lines(ws.out_dir / "registry.jsonl");
  CHECK(registry_lines.size() == 4);

  // Resumed rerun trains nothing new.
  auto rerun = run_cmd("grid " + ws.cfg_arg() + " --resume");
  REQUIRE(rerun.exit_code == 0);
  CHECK(rerun.output.find("0 to train") != std::string::npos);
  CHECK(read_lines(ws.out_dir / "registry.jsonl").size() == 4);

  // Without --resume a completed run is an input error.
  CHECK(run_cmd("grid " + ws.cfg_arg()).exit_code == 2);

  // Family filter restricts the grid.
  auto family_run = run_cmd("grid " + ws.cfg_arg() + " --family cnn --resume");
  REQUIRE(family_run.exit_code == 0);
  CHECK(family_run.output.find("2 runs configured") != std::string::npos);

  // predict reproduces the training-time dev predictions from the checkpoint.
  const auto first_run_id = json::parse(registry_lines[0])["run_id"].get<std::string>();
  const auto run_dir = ws.out_dir / "runs" / first_run_id;
  const std::string trained_dev = read_text_file(run_dir / "dev_predictions.tsv");
  REQUIRE(run_cmd("predict " + ws.cfg_arg() + " --run-id " + first_run_id + " --split dev")
              .exit_code == 0);
  CHECK(read_text_file(run_dir / "dev_predictions.tsv") == trained_dev);

  // ensemble of one equals that model's tuned-threshold dev metrics.
  REQUIRE(run_cmd("ensemble " + ws.cfg_arg() + " --name ens_single").exit_code == 0);
  {
    const auto spec = json::parse(read_text_file(ws.out_dir / "ensembles/ens_single/ensemble.json"));
    REQUIRE(spec["members"].size() == 1);
    const std::string best_id = spec["members"][0].get<std::string>();
    const auto member_preds = PredictionSet::from_tsv(
        best_id, "dev", read_text_file(ws.out_dir / "runs" / best_id / "dev_predictions.tsv"));
    // Labels from the prepared dev split.
    TsvSchema prepared;
    prepared.header = true;
    const auto dev_records = load_task_tsv(ws.out_dir / "prepared/dev.tsv", prepared, 2);
    std::unordered_map<std::string, int> by_id;
    for (const auto& rec : dev_records) by_id[rec.par_id] = *rec.binary_label;
    const auto labels = labels_for(member_preds, by_id);
    const auto choice =
        optimize_threshold(member_preds, labels, make_threshold_grid(0.05, 0.95, 0.05));
    const auto metrics = json::parse(read_text_file(ws.out_dir / "ensembles/ens_single/dev_metrics.json"));
    CHECK(metrics["f1"].get<double>() == doctest::Approx(choice.f1));
    CHECK(spec["threshold"].get<double>() == doctest::Approx(choice.threshold));
  }

  // The two configured multi-member ensembles build and write artifacts.
  for (const std::string name : {"ens1", "ens2"}) {
    REQUIRE(run_cmd("ensemble " + ws.cfg_arg() + " --name " + name).exit_code == 0);
    CHECK(std::filesystem::exists(ws.out_dir / "ensembles" / name / "ensemble.json"));
    CHECK(std::filesystem::exists(ws.out_dir / "ensembles" / name / "dev_metrics.json"));
    // Unlabeled test split: predictions written, no metrics file.
    CHECK(std::filesystem::exists(ws.out_dir / "ensembles" / name / "test_predictions.tsv"));
    CHECK_FALSE(std::filesystem::exists(ws.out_dir / "ensembles" / name / "test_metrics.json"));
  }
  {
    const auto spec = json::parse(read_text_file(ws.out_dir / "ensembles/ens2/ensemble.json"));
    REQUIRE(spec["members"].size() == 3);  // 1 transformer + 1 cnn + 1 bilstm
    std::set<std::string> families;
    for (const auto& member : spec["members"]) {
      const std::string id = member.get<std::string>();
      families.insert(id.substr(0, id.find('_')));
    }
    CHECK(families == std::set<std::string>{"bilstm", "cnn", "transformer"});
  }

  // Ensemble larger than the registry propagates a selection error (exit 3).
  CHECK(run_cmd("ensemble " + ws.cfg_arg() + " --name ens_toolarge").exit_code == 3);

  // sweep writes the CSV and the rendered curve; n=1 equals the tuned best single.
  REQUIRE(run_cmd("sweep " + ws.cfg_arg()).exit_code == 0);
  const auto sweep_csv = read_lines(ws.out_dir / "sweep/sweep.csv");
  REQUIRE(sweep_csv.size() == 5);  // header + 4 points
  CHECK(sweep_csv[0] == "n,precision,recall,f1");
  CHECK(std::filesystem::exists(ws.out_dir / "sweep/sweep.svg"));
  {
    const auto single = json::parse(read_text_file(ws.out_dir / "ensembles/ens_single/dev_metrics.json"));
    std::istringstream row(sweep_csv[1]);
    std::string field;
    std::getline(row, field, ',');
    CHECK(field == "1");
    std::getline(row, field, ',');
    std::getline(row, field, ',');
    std::getline(row, field, ',');
    CHECK(std::stod(field) == doctest::Approx(single["f1"].get<double>()));
  }

  // analyze on dev writes the breakdown and both listings.
  REQUIRE(run_cmd("analyze " + ws.cfg_arg() + " --source ens1 --split dev").exit_code == 0);
  const auto breakdown = read_lines(ws.out_dir / "analysis/ens1/dev/error_breakdown.csv");
  REQUIRE(breakdown.size() >= 2);
  CHECK(breakdown[0] == "keyword,fp,fn,total_pcl,total");
  CHECK(breakdown.back().rfind("ALL,", 0) == 0);
  CHECK(std::filesystem::exists(ws.out_dir / "analysis/ens1/dev/false_positives.tsv"));
  CHECK(std::filesystem::exists(ws.out_dir / "analysis/ens1/dev/false_negatives.tsv"));

  // analyze on the unlabeled test split is a label error (exit 4).
  CHECK(run_cmd("analyze " + ws.cfg_arg() + " --source ens1 --split test").exit_code == 4);

  // report aggregates per-family groups.
  REQUIRE(run_cmd("report " + ws.cfg_arg()).exit_code == 0);
  const auto report = json::parse(read_text_file(ws.out_dir / "report/report.json"));
  CHECK(report.contains("groups"));
  CHECK(report["groups"].contains("cnn/tiny_w2v"));
  CHECK(report["groups"]["cnn/tiny_w2v"]["runs"].get<int>() == 2);
  CHECK(report.contains("thresholds"));
  CHECK(std::filesystem::exists(ws.out_dir / "report/report.csv"));
}

TEST_CASE("bad inputs produce the documented exit codes") {
  Workspace ws;
  // Missing dataset file: exit 2 and the diagnostic names the path.
  pcl::test::write_file(ws.dir.file("broken.json"), R"({
    "dataset": {"train_tsv": "absent.tsv", "dev_tsv": "dev.tsv"},
    "grid": {}
  })");
  auto missing = run_cmd("prepare --config " + ws.dir.file("broken.json").string());
  CHECK(missing.exit_code == 2);
  CHECK(missing.output.find("absent.tsv") != std::string::npos);

  CHECK(run_cmd("prepare --config " + ws.dir.file("nonexistent.json").string()).exit_code == 2);

  // Config validation failures carry the JSON path.
  pcl::test::write_file(ws.dir.file("badgrid.json"), R"({
    "dataset": {"train_tsv": "train.tsv", "dev_tsv": "dev.tsv"},
    "grid": {"cnn": {"seeds": [0]}}
  })");
  auto badgrid = run_cmd("prepare --config " + ws.dir.file("badgrid.json").string());
  CHECK(badgrid.exit_code == 2);
  CHECK(badgrid.output.find("/grid/cnn/embeddings") != std::string::npos);

  // Unknown run id in train: exit 2.
  CHECK(run_cmd("train " + ws.cfg_arg() + " --run-id not_a_run").exit_code == 2);
}

TEST_CASE("PCL_ENCODER_CACHE overrides the configured cache directory") {
  Workspace ws;
  ::setenv("PCL_ENCODER_CACHE", "/tmp/override-cache", 1);
  const auto cfg = PipelineConfig::load(ws.config_path);
  ::unsetenv("PCL_ENCODER_CACHE");
  CHECK(cfg.encoder_cache == std::filesystem::path("/tmp/override-cache"));
  CHECK(cfg.encoder_archive("mini") ==
        std::filesystem::path("/tmp/override-cache/mini.pclenc"));

  const auto plain = PipelineConfig::load(ws.config_path);
  CHECK(plain.encoder_cache == ws.dir.file("encoders"));
}

TEST_CASE("prepare also supports a single corpus with stratified splits") {
  TempDir dir("cli-strat");
  pcl::test::write_file(dir.file("corpus.tsv"), fixture_corpus(40, true));
  json cfg{{"out_dir", "out"},
           {"dataset",
            {{"tsv", "corpus.tsv"},
             {"splits",
              {{"mode", "stratified"},
               {"fractions", {{"train", 0.75}, {"dev", 0.25}}},
               {"seed", 3}}}}},
           {"grid", json::object()}};
  pcl::test::write_file(dir.file("config.json"), cfg.dump());
  auto prep = run_cmd("prepare --config " + dir.file("config.json").string());
  REQUIRE(prep.exit_code == 0);

  TsvSchema prepared;
  prepared.header = true;
  const auto train = load_task_tsv(dir.file("out/prepared/train.tsv"), prepared, 2);
  const auto dev = load_task_tsv(dir.file("out/prepared/dev.tsv"), prepared, 2);
  // 14 positives / 26 negatives; largest-remainder apportionment sends both
  // .5 remainders to dev (first configured split).
  CHECK(train.size() == 29);
  CHECK(dev.size() == 11);
  CHECK(train.size() + dev.size() == 40);
}
