#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "pcl/corpus.hpp"
#include "pcl/errors.hpp"
#include "support.hpp"

using namespace pcl;
using pcl::test::TempDir;

namespace {

const char* kFixture =
    "p1\ta1\thomeless\tus\tVolunteers handed out meals.\t0\n"
    "p2\ta2\tpoor-families\tgb\tThey deserve our pity and charity.\t2\n"
    "p3\ta3\thomeless\tau\tA donation of one dollar can save a life.\t4\n";

}  // namespace

TEST_CASE("binarize_label thresholds at the cutoff") {
  CHECK(binarize_label(0, 2) == 0);
  CHECK(binarize_label(4, 2) == 1);
  CHECK(binarize_label(2, 2) == 1);
  CHECK_THROWS_AS(binarize_label(7, 2), ValidationError);
  CHECK_THROWS_AS(binarize_label(-1, 2), ValidationError);
  CHECK_THROWS_AS(binarize_label(1, 0), ValidationError);
}

TEST_CASE("binarization is monotone in the raw label") {
  for (int cutoff = 1; cutoff <= 4; ++cutoff)
    for (int lo = 0; lo <= 4; ++lo)
      for (int hi = lo; hi <= 4; ++hi)
        CHECK(binarize_label(lo, cutoff) <= binarize_label(hi, cutoff));
}

TEST_CASE("load_task_tsv parses the fixture and binarizes under cutoff 2") {
  TempDir dir("corpus");
  pcl::test::write_file(dir.file("fixture.tsv"), kFixture);

  auto records = load_task_tsv(dir.file("fixture.tsv"), TsvSchema{}, 2);
  REQUIRE(records.size() == 3);
  CHECK(records[0].par_id == "p1");
  CHECK(records[0].binary_label == 0);
  CHECK(records[1].binary_label == 1);
  CHECK(records[2].binary_label == 1);
  CHECK(records[2].keyword == "homeless");
  CHECK(records[2].raw_label == 4);
}

TEST_CASE("load_task_tsv handles header-only files, bad labels and bad rows") {
  TempDir dir("corpus");

  TsvSchema with_header;
  with_header.header = true;
  pcl::test::write_file(dir.file("empty.tsv"), "par_id\tart_id\tkeyword\tcountry\ttext\tlabel\n");
  CHECK(load_task_tsv(dir.file("empty.tsv"), with_header, 2).empty());

  pcl::test::write_file(dir.file("bad_label.tsv"), "p1\ta1\tk\tus\tsome text\t7\n");
  CHECK_THROWS_WITH_AS(load_task_tsv(dir.file("bad_label.tsv"), TsvSchema{}, 2),
                       doctest::Contains("line 1"), ValidationError);

  pcl::test::write_file(dir.file("short_row.tsv"), "p1\ta1\tk\tus\tsome text\t1\np2\ta2\tk\n");
  CHECK_THROWS_WITH_AS(load_task_tsv(dir.file("short_row.tsv"), TsvSchema{}, 2),
                       doctest::Contains("line 2"), ParseError);

  CHECK_THROWS_AS(load_task_tsv(dir.file("no_such.tsv"), TsvSchema{}, 2), InputError);
}

TEST_CASE("rows with empty text are dropped and counted") {
  TempDir dir("corpus");
  pcl::test::write_file(dir.file("gaps.tsv"),
                        "p1\ta1\tk\tus\treal text\t1\n"
                        "p2\ta2\tk\tus\t   \t4\n"
                        "p3\ta3\tk\tus\tmore text\t0\n");
  LoadStats stats;
  auto records = load_task_tsv(dir.file("gaps.tsv"), TsvSchema{}, 2, &stats);
  CHECK(records.size() == 2);
  CHECK(stats.rows_read == 3);
  CHECK(stats.rows_dropped_empty_text == 1);
}

TEST_CASE("records come back sorted by par_id and reject duplicates") {
  TempDir dir("corpus");
  pcl::test::write_file(dir.file("unsorted.tsv"),
                        "p9\ta\tk\tus\tlate row\t0\n"
                        "p1\ta\tk\tus\tearly row\t1\n");
  auto records = load_task_tsv(dir.file("unsorted.tsv"), TsvSchema{}, 2);
  CHECK(records[0].par_id == "p1");
  CHECK(records[1].par_id == "p9");

  pcl::test::write_file(dir.file("dup.tsv"),
                        "p1\ta\tk\tus\tone\t0\n"
                        "p1\ta\tk\tus\ttwo\t0\n");
  CHECK_THROWS_WITH_AS(load_task_tsv(dir.file("dup.tsv"), TsvSchema{}, 2),
                       doctest::Contains("p1"), ValidationError);
}

TEST_CASE("task tsv round-trips field by field") {
  TempDir dir("corpus");
  pcl::test::write_file(dir.file("fixture.tsv"), kFixture);
  auto records = load_task_tsv(dir.file("fixture.tsv"), TsvSchema{}, 2);

  TsvSchema with_header;
  with_header.header = true;
  pcl::test::write_file(dir.file("rt.tsv"), to_task_tsv(records, with_header));
  auto reloaded = load_task_tsv(dir.file("rt.tsv"), with_header, 2);
  REQUIRE(reloaded.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(reloaded[i].par_id == records[i].par_id);
    CHECK(reloaded[i].art_id == records[i].art_id);
    CHECK(reloaded[i].keyword == records[i].keyword);
    CHECK(reloaded[i].country_code == records[i].country_code);
    CHECK(reloaded[i].text == records[i].text);
    CHECK(reloaded[i].raw_label == records[i].raw_label);
    CHECK(reloaded[i].binary_label == records[i].binary_label);
  }
}

TEST_CASE("unlabeled rows survive the round trip as unlabeled") {
  TsvSchema schema;
  schema.header = true;
  std::vector<ParagraphRecord> records{pcl::test::record("p1", "k", "some text", 3)};
  records.push_back(records[0]);
  records[1].par_id = "p2";
  records[1].raw_label.reset();
  records[1].binary_label.reset();

  TempDir dir("corpus");
  pcl::test::write_file(dir.file("mixed.tsv"), to_task_tsv(records, schema));
  auto reloaded = load_task_tsv(dir.file("mixed.tsv"), schema, 2);
  REQUIRE(reloaded.size() == 2);
  CHECK(reloaded[0].binary_label == 1);
  CHECK_FALSE(reloaded[1].raw_label.has_value());

  DataSplit split{"test", reloaded};
  CHECK_FALSE(split.has_labels());
  CHECK_THROWS_AS(split.binary_labels(), LabelError);
}

TEST_CASE("explicit splits follow the id lists") {
  std::vector<ParagraphRecord> records{pcl::test::record("a", "k", "first", 0),
                                       pcl::test::record("b", "k", "second", 4),
                                       pcl::test::record("c", "k", "third", 2)};
  SplitConfig config;
  config.mode = SplitConfig::Mode::Explicit;
  config.id_lists = {{"train", {"a", "b"}}, {"dev", {"c"}}};

  auto splits = make_splits(records, config);
  REQUIRE(splits.size() == 2);
  CHECK(splits.at("train").records.size() == 2);
  CHECK(splits.at("dev").records.size() == 1);
  CHECK(splits.at("dev").records[0].par_id == "c");
}

TEST_CASE("explicit split referencing an unknown id names it") {
  std::vector<ParagraphRecord> records{pcl::test::record("a", "k", "first", 0)};
  SplitConfig config;
  config.mode = SplitConfig::Mode::Explicit;
  config.id_lists = {{"train", {"a", "zzz"}}};
  CHECK_THROWS_WITH_AS(make_splits(records, config), doctest::Contains("zzz"), ValidationError);
}

TEST_CASE("explicit splits must cover the corpus exactly") {
  std::vector<ParagraphRecord> records{pcl::test::record("a", "k", "first", 0),
                                       pcl::test::record("b", "k", "second", 4)};
  SplitConfig config;
  config.mode = SplitConfig::Mode::Explicit;
  config.id_lists = {{"train", {"a"}}};
  CHECK_THROWS_WITH_AS(make_splits(records, config), doctest::Contains("b"), ValidationError);

  config.id_lists = {{"train", {"a", "b"}}, {"dev", {"b"}}};
  CHECK_THROWS_AS(make_splits(records, config), ValidationError);
}

TEST_CASE("stratified 80/20 on a balanced 100-record fixture puts 10 positives in dev") {
  std::vector<ParagraphRecord> records;
  for (int i = 0; i < 100; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "r%03d", i);
    records.push_back(pcl::test::record(buf, "k", "text " + std::to_string(i), i < 50 ? 0 : 4));
  }
  SplitConfig config;
  config.mode = SplitConfig::Mode::Stratified;
  config.fractions = {{"train", 0.8}, {"dev", 0.2}};
  config.seed = 13;

  auto splits = make_splits(records, config);
  long dev_pos = 0;
  for (const auto& rec : splits.at("dev").records) dev_pos += *rec.binary_label;
  CHECK(splits.at("dev").records.size() == 20);
  CHECK(dev_pos == 10);

  // Positive rate within one percentage point of the global 50%.
  const double dev_rate = static_cast<double>(dev_pos) / 20.0;
  CHECK(std::abs(dev_rate - 0.5) < 0.01);
}

TEST_CASE("stratified splits partition the corpus exactly and deterministically") {
  std::mt19937_64 rng(99);
  std::vector<ParagraphRecord> records;
  for (int i = 0; i < 137; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "r%03d", i);
    records.push_back(
        pcl::test::record(buf, "k", "text " + std::to_string(i), rng() % 10 == 0 ? 3 : 1));
  }
  SplitConfig config;
  config.mode = SplitConfig::Mode::Stratified;
  config.fractions = {{"train", 0.7}, {"dev", 0.15}, {"test", 0.15}};
  config.seed = 5;

  auto splits = make_splits(records, config);
  auto again = make_splits(records, config);

  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& [name, split] : splits) {
    total += split.records.size();
    for (const auto& rec : split.records) CHECK(seen.insert(rec.par_id).second);
    // sorted by par_id
    for (std::size_t i = 1; i < split.records.size(); ++i)
      CHECK(split.records[i - 1].par_id < split.records[i].par_id);
    // deterministic under the same seed
    REQUIRE(again.at(name).records.size() == split.records.size());
    for (std::size_t i = 0; i < split.records.size(); ++i)
      CHECK(again.at(name).records[i].par_id == split.records[i].par_id);
  }
  CHECK(total == records.size());
  CHECK(seen.size() == records.size());
}
