#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "pcl/checkpoint.hpp"
#include "pcl/errors.hpp"
#include "pcl/io_util.hpp"
#include "pcl/training.hpp"
#include "support.hpp"

using namespace pcl;
using pcl::test::TempDir;

namespace {

GridConfig reference_grid() {
  GridConfig grid;
  grid.cnn.enabled = true;
  grid.cnn.seeds = {0, 1, 2};
  grid.cnn.embeddings = {"googlenews", "fasttext", "glove_word", "glove_twitter"};
  grid.bilstm.enabled = true;
  grid.bilstm.seeds = {0, 1, 2};
  grid.bilstm.embeddings = {"googlenews", "fasttext", "glove_word", "glove_twitter"};
  grid.transformer.enabled = true;
  grid.transformer.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  grid.transformer.step_sizes = {2, 3};
  grid.transformer.transformer.encoder_id = "roberta-base";
  return grid;
}

DataSplit toy_split(const std::string& name) {
  DataSplit split;
  split.name = name;
  split.records = pcl::test::toy_separable_corpus();
  return split;
}

TrainRunSpec cnn_toy_spec(std::uint64_t seed) {
  TrainRunSpec spec;
  spec.run_id = "cnn_toy_s" + std::to_string(seed);
  spec.family = Family::Cnn;
  spec.seed = seed;
  spec.base_lr = 1e-3;
  spec.max_epochs = 35;
  spec.batch_size = 8;
  spec.embedding_alias = "random";
  spec.cnn.max_len = 12;
  spec.cnn.dropout_rate = 0.5;
  return spec;
}

}  // namespace

TEST_CASE("stepwise_lr follows base * gamma^floor((epoch-1)/step)") {
  CHECK(stepwise_lr(1, 2e-5, 2, 0.5) == doctest::Approx(2e-5));
  CHECK(stepwise_lr(3, 2e-5, 2, 0.5) == doctest::Approx(1e-5));
  CHECK(stepwise_lr(7, 1e-3, 3, 0.1) == doctest::Approx(1e-5));
  CHECK_THROWS_AS(stepwise_lr(0, 1e-3, 2, 0.5), ValidationError);
  CHECK_THROWS_AS(stepwise_lr(1, 1e-3, 0, 0.5), ValidationError);
  CHECK_THROWS_AS(stepwise_lr(1, 1e-3, 2, 0.0), ValidationError);
}

TEST_CASE("stepwise_lr is non-increasing and equals base_lr at epoch 1") {
  for (int step : {1, 2, 3, 5}) {
    double previous = stepwise_lr(1, 7e-4, step, 0.5);
    CHECK(previous == doctest::Approx(7e-4));
    for (int epoch = 2; epoch <= 40; ++epoch) {
      const double lr = stepwise_lr(epoch, 7e-4, step, 0.5);
      CHECK(lr <= previous + 1e-18);
      previous = lr;
    }
  }
}

TEST_CASE("the reference grid expands to 46 runs (12 + 12 + 22)") {
  const auto specs = expand_grid(reference_grid());
  CHECK(specs.size() == 46);
  long cnn = 0, bilstm = 0, transformer = 0;
  std::set<std::string> ids;
  for (const auto& spec : specs) {
    ids.insert(spec.run_id);
    switch (spec.family) {
      case Family::Cnn: ++cnn; break;
      case Family::Bilstm: ++bilstm; break;
      case Family::Transformer: ++transformer; break;
    }
  }
  CHECK(cnn == 12);
  CHECK(bilstm == 12);
  CHECK(transformer == 22);
  CHECK(ids.size() == 46);  // run ids unique
  // Deterministic enumeration.
  const auto again = expand_grid(reference_grid());
  for (std::size_t i = 0; i < specs.size(); ++i) CHECK(specs[i].run_id == again[i].run_id);
}

TEST_CASE("single-cell and empty grids") {
  GridConfig grid;
  grid.cnn.enabled = true;
  grid.cnn.seeds = {7};
  grid.cnn.embeddings = {"googlenews"};
  CHECK(expand_grid(grid).size() == 1);
  CHECK(expand_grid(grid)[0].run_id == "cnn_googlenews_s7");

  GridConfig empty;
  CHECK(expand_grid(empty).empty());
}

TEST_CASE("duplicate run ids are rejected") {
  GridConfig grid;
  grid.cnn.enabled = true;
  grid.cnn.seeds = {1};
  grid.cnn.embeddings = {"same", "same"};
  CHECK_THROWS_AS(expand_grid(grid), ConfigError);
}

TEST_CASE("spec JSON round-trips") {
  for (const auto& spec : expand_grid(reference_grid())) {
    const TrainRunSpec back = TrainRunSpec::from_json(spec.to_json());
    CHECK(back.run_id == spec.run_id);
    CHECK(back.family == spec.family);
    CHECK(back.seed == spec.seed);
    CHECK(back.base_lr == spec.base_lr);
    CHECK(back.max_epochs == spec.max_epochs);
    CHECK(back.schedule.kind == spec.schedule.kind);
    CHECK(back.embedding_alias == spec.embedding_alias);
  }
}

TEST_CASE("tensor archives round-trip doubles bit-exactly") {
  TempDir dir("ckpt");
  ParameterStore params;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(-2, 2);
  Eigen::MatrixXd a(3, 5), b(7, 1);
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i / 5, i % 5) = unif(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b(i, 0) = unif(rng);
  a(0, 0) = 1.0 / 3.0;
  b(0, 0) = 0.1 + 0.2;  // not representable exactly; must survive unchanged
  params.add("a", a);
  params.add("b", b);

  Archive archive;
  archive.meta() = {{"kind", "checkpoint"}, {"note", "test"}};
  archive.save(dir.file("model.bin"), params);

  ParameterStore loaded;
  Archive read = Archive::load(dir.file("model.bin"), loaded);
  CHECK(read.meta().at("note") == "test");
  REQUIRE(loaded.tensors().size() == 2);
  CHECK(loaded.get("a").value == a);  // exact equality, no tolerance
  CHECK(loaded.get("b").value == b);

  pcl::test::write_file(dir.file("bad.bin"), "definitely not an archive");
  ParameterStore sink;
  CHECK_THROWS_AS(Archive::load(dir.file("bad.bin"), sink), FormatError);
}

TEST_CASE("a diverging run aborts with epoch and batch in the diagnostic") {
  TempDir dir("train");
  TrainRunSpec spec = cnn_toy_spec(1);
  // Poison the optimizer: the first step turns every parameter NaN and the
  // next forward pass must abort with run context.
  spec.base_lr = std::numeric_limits<double>::quiet_NaN();
  spec.max_epochs = 3;
  Vocabulary vocab = Vocabulary::build(pcl::test::toy_separable_corpus(), 1);
  TrainEnv env;
  env.vocab = &vocab;
  env.random_embedding_dim = 8;
  env.run_dir = dir.path();
  CHECK_THROWS_WITH_AS(train(spec, toy_split("train"), toy_split("dev"), env),
                       doctest::Contains("epoch"), NumericError);
}

TEST_CASE("train rejects degenerate configurations") {
  TempDir dir("train");
  TrainRunSpec spec = cnn_toy_spec(1);
  TrainEnv env;
  Vocabulary vocab = Vocabulary::build(pcl::test::toy_separable_corpus(), 1);
  env.vocab = &vocab;
  env.random_embedding_dim = 8;
  env.run_dir = dir.path();

  const DataSplit train_split = toy_split("train");
  const DataSplit dev_split = toy_split("dev");

  spec.max_epochs = 0;
  CHECK_THROWS_AS(train(spec, train_split, dev_split, env), ConfigError);
  spec.max_epochs = 1;
  DataSplit empty_dev;
  empty_dev.name = "dev";
  CHECK_THROWS_AS(train(spec, train_split, empty_dev, env), ConfigError);
}

TEST_CASE("CNN overfits the separable toy corpus within the epoch budget") {
  TempDir dir("train");
  const TrainRunSpec spec = cnn_toy_spec(3);
  Vocabulary vocab = Vocabulary::build(pcl::test::toy_separable_corpus(), 1);
  TrainEnv env;
  env.vocab = &vocab;
  env.random_embedding_dim = 8;
  env.run_dir = dir.path();

  const DataSplit train_split = toy_split("train");
  const auto record = train(spec, train_split, toy_split("dev"), env);

  CHECK(record.best_dev_f1 == doctest::Approx(1.0));
  CHECK(record.best_epoch <= 35);
  // Loss decreased from its epoch-1 value.
  CHECK(record.per_epoch.back().train_loss < record.per_epoch.front().train_loss);
  // best_dev_f1 is the max over per-epoch dev F1.
  double max_f1 = 0;
  for (const auto& s : record.per_epoch) max_f1 = std::max(max_f1, s.dev_f1);
  CHECK(record.best_dev_f1 == doctest::Approx(max_f1));
  CHECK(std::filesystem::exists(record.checkpoint_path));
  CHECK(std::filesystem::exists(record.dev_predictions_path));
  CHECK(std::filesystem::exists(dir.file("epochs.csv")));
}

TEST_CASE("identical spec and seed reproduce best_dev_f1; reload reproduces dev F1 exactly") {
  Vocabulary vocab = Vocabulary::build(pcl::test::toy_separable_corpus(), 1);
  const DataSplit train_split = toy_split("train");
  const DataSplit dev_split = toy_split("dev");

  auto run_once = [&](const std::filesystem::path& dir, Family family) {
    TrainRunSpec spec = cnn_toy_spec(11);
    if (family == Family::Bilstm) {
      spec.family = Family::Bilstm;
      spec.run_id = "bilstm_toy";
      spec.bilstm.hidden_size = 8;
      spec.bilstm.max_len = 12;
      spec.max_epochs = 15;
    } else {
      spec.max_epochs = 12;
    }
    TrainEnv env;
    env.vocab = &vocab;
    env.random_embedding_dim = 8;
    env.run_dir = dir;
    return train(spec, train_split, dev_split, env);
  };

  for (Family family : {Family::Cnn, Family::Bilstm}) {
    TempDir d1("train-a"), d2("train-b");
    const auto r1 = run_once(d1.path(), family);
    const auto r2 = run_once(d2.path(), family);
    CHECK(std::abs(r1.best_dev_f1 - r2.best_dev_f1) < 1e-6);
    REQUIRE(r1.per_epoch.size() == r2.per_epoch.size());
    for (std::size_t e = 0; e < r1.per_epoch.size(); ++e)
      CHECK(r1.per_epoch[e].train_loss == doctest::Approx(r2.per_epoch[e].train_loss));

    // Reloading the checkpoint reproduces the recorded dev F1 exactly.
    auto model = load_model_from_checkpoint(r1.checkpoint_path, &vocab, {});
    const PredictionSet dev = predict(*model, dev_split, "reload");
    std::vector<int> preds;
    for (const auto& [id, p] : dev.entries) preds.push_back(p >= 0.5 ? 1 : 0);
    const auto metrics = prf1(preds, dev_split.binary_labels());
    CHECK(metrics.f1 == r1.best_dev_f1);  // exact

    // And the stored dev predictions equal the reload's bit for bit.
    const auto stored = PredictionSet::from_tsv(
        "stored", "dev", pcl::read_text_file(r1.dev_predictions_path));
    REQUIRE(stored.entries.size() == dev.entries.size());
    for (std::size_t i = 0; i < dev.entries.size(); ++i)
      CHECK(stored.entries[i].second == dev.entries[i].second);
  }
}

TEST_CASE("vocabulary hash mismatches are rejected at reload") {
  TempDir dir("train");
  Vocabulary vocab = Vocabulary::build(pcl::test::toy_separable_corpus(), 1);
  TrainRunSpec spec = cnn_toy_spec(2);
  spec.max_epochs = 1;
  TrainEnv env;
  env.vocab = &vocab;
  env.random_embedding_dim = 6;
  env.run_dir = dir.path();
  const auto record = train(spec, toy_split("train"), toy_split("dev"), env);

  std::vector<ParagraphRecord> other{pcl::test::record("q1", "k", "totally different words", 0)};
  Vocabulary wrong = Vocabulary::build(other, 1);
  CHECK_THROWS_AS(load_model_from_checkpoint(record.checkpoint_path, &wrong, {}), InputError);
}

TEST_CASE("registry appends and reloads records, rejecting duplicates") {
  TempDir dir("registry");
  const auto path = dir.file("registry.jsonl");

  TrainedModelRecord record;
  record.run_id = "cnn_toy_s1";
  record.spec = cnn_toy_spec(1);
  record.best_epoch = 3;
  record.best_dev_f1 = 0.75;
  record.param_count = 123;
  record.checkpoint_path = dir.file("ckpt.bin");
  record.dev_predictions_path = dir.file("dev.tsv");
  append_registry(path, record);

  record.run_id = "cnn_toy_s2";
  record.spec.run_id = "cnn_toy_s2";
  record.best_dev_f1 = 0.8;
  append_registry(path, record);

  const auto entries = load_registry(path);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].run_id == "cnn_toy_s1");
  CHECK(entries[0].best_dev_f1 == doctest::Approx(0.75));
  CHECK(entries[1].ranked().best_dev_f1 == doctest::Approx(0.8));
  CHECK(entries[0].spec.family == Family::Cnn);

  append_registry(path, record);  // same run_id again
  CHECK_THROWS_AS(load_registry(path), FormatError);

  CHECK(load_registry(dir.file("missing.jsonl")).empty());
}

TEST_CASE("transformer fine-tuning drives the toy loss down") {
  TempDir dir("train");
  std::vector<std::string> texts;
  for (const auto& rec : pcl::test::toy_separable_corpus()) texts.push_back(rec.text);
  write_miniature_encoder(dir.file("mini.pclenc"), "mini", texts, 16, 2, 1, 24, 32, 100, 9);

  TrainRunSpec spec;
  spec.run_id = "transformer_toy";
  spec.family = Family::Transformer;
  spec.seed = 4;
  spec.base_lr = 1e-3;
  spec.schedule.kind = LrSchedule::Kind::Stepwise;
  spec.schedule.step_size = 5;
  spec.schedule.gamma = 0.5;
  spec.max_epochs = 8;
  spec.batch_size = 8;
  spec.transformer.encoder_id = "mini";
  spec.transformer.max_tokens = 32;

  TrainEnv env;
  env.encoder_archive = dir.file("mini.pclenc");
  env.run_dir = dir.path() / "run";
  const auto record = train(spec, toy_split("train"), toy_split("dev"), env);
  CHECK(record.per_epoch.back().train_loss < record.per_epoch.front().train_loss);
  CHECK(record.best_dev_f1 > 0.0);

  // Reload through the checkpoint path used by predict.
  auto model = load_model_from_checkpoint(record.checkpoint_path, nullptr, dir.file("mini.pclenc"));
  const auto dev = predict(*model, toy_split("dev"), "reload");
  std::vector<int> preds;
  for (const auto& [id, p] : dev.entries) preds.push_back(p >= 0.5 ? 1 : 0);
  const auto metrics = prf1(preds, toy_split("dev").binary_labels());
  CHECK(metrics.f1 == doctest::Approx(record.best_dev_f1).epsilon(1e-4));
}
