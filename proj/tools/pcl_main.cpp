#include <CLI11.hpp>
#include <iostream>

#include "pcl/commands.hpp"
#include "pcl/errors.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"PCL detection experiment pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string run_id, family, split = "dev", name, source;
  int jobs = 1;
  bool resume = false;
  double threshold = -1;
  int n_max = 0;
  std::string out_override;

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "pipeline config file")->required();
    cmd->add_option("--out", out_override, "override the configured output root");
  };
  auto load_cfg = [&]() {
    pcl::PipelineConfig cfg = pcl::PipelineConfig::load(config_path);
    if (!out_override.empty()) cfg.out_dir = std::filesystem::absolute(out_override);
    return cfg;
  };

  auto* prepare = app.add_subcommand("prepare", "ingest the corpus, build splits and vocabulary");
  add_config(prepare);

  auto* train = app.add_subcommand("train", "train one grid run");
  add_config(train);
  train->add_option("--run-id", run_id, "run id from the expanded grid")->required();
  train->add_flag("--resume", resume, "skip silently when the run is already registered");

  auto* grid = app.add_subcommand("grid", "train every run in the configured grid");
  add_config(grid);
  grid->add_option("--family", family, "restrict to one family")
      ->check(CLI::IsMember({"cnn", "bilstm", "transformer"}));
  grid->add_option("--jobs", jobs, "worker processes")->check(CLI::PositiveNumber);
  grid->add_flag("--resume", resume, "skip runs already in the registry");

  auto* predict = app.add_subcommand("predict", "write a trained run's predictions for a split");
  add_config(predict);
  predict->add_option("--run-id", run_id)->required();
  predict->add_option("--split", split)->check(CLI::IsMember({"dev", "test"}));

  auto* ensemble = app.add_subcommand("ensemble", "build, tune and evaluate a configured ensemble");
  add_config(ensemble);
  ensemble->add_option("--name", name, "ensemble name from the config")->required();

  auto* sweep = app.add_subcommand("sweep", "ensemble-size sweep (CSV + SVG curve)");
  add_config(sweep);
  sweep->add_option("--n-max", n_max, "largest ensemble size");

  auto* analyze = app.add_subcommand("analyze", "per-keyword error breakdown and FP/FN listings");
  add_config(analyze);
  analyze->add_option("--source", source, "run id or ensemble name")->required();
  analyze->add_option("--split", split)->check(CLI::IsMember({"dev", "test"}));
  analyze->add_option("--threshold", threshold, "override the decision threshold");

  auto* report = app.add_subcommand("report", "aggregate per-family averages from the registry");
  add_config(report);

  pcl::commands::MakeEncoderOptions enc;
  std::string enc_out, enc_tsv;
  auto* make_encoder = app.add_subcommand(
      "make-encoder", "generate a miniature pretrained encoder archive for desk-scale runs");
  make_encoder->add_option("--out", enc_out, "archive path to write")->required();
  make_encoder->add_option("--id", enc.encoder_id, "encoder id");
  make_encoder->add_option("--from-tsv", enc_tsv, "corpus TSV to harvest the vocabulary from")
      ->required();
  make_encoder->add_flag("--header", enc.header, "corpus TSV has a header row");
  make_encoder->add_option("--dim", enc.dim)->check(CLI::PositiveNumber);
  make_encoder->add_option("--heads", enc.heads)->check(CLI::PositiveNumber);
  make_encoder->add_option("--layers", enc.layers)->check(CLI::PositiveNumber);
  make_encoder->add_option("--ff-dim", enc.ff_dim)->check(CLI::PositiveNumber);
  make_encoder->add_option("--max-positions", enc.max_positions)->check(CLI::PositiveNumber);
  make_encoder->add_option("--words", enc.max_whole_words, "whole-word pieces to keep");
  make_encoder->add_option("--seed", enc.seed);

  CLI11_PARSE(app, argc, argv);

  if (prepare->parsed()) {
    pcl::commands::prepare(load_cfg());
  } else if (train->parsed()) {
    pcl::commands::train_one(load_cfg(), run_id, resume);
  } else if (grid->parsed()) {
    pcl::commands::grid(load_cfg(),
                        family.empty() ? std::nullopt : std::make_optional(family), jobs, resume,
                        std::filesystem::absolute(config_path));
  } else if (predict->parsed()) {
    pcl::commands::predict_split(load_cfg(), run_id, split);
  } else if (ensemble->parsed()) {
    pcl::commands::ensemble(load_cfg(), name);
  } else if (sweep->parsed()) {
    pcl::commands::sweep(load_cfg(), n_max > 0 ? std::make_optional(n_max) : std::nullopt);
  } else if (analyze->parsed()) {
    pcl::commands::analyze(load_cfg(), source, split,
                           threshold > 0 ? std::make_optional(threshold) : std::nullopt);
  } else if (report->parsed()) {
    pcl::commands::report(load_cfg());
  } else if (make_encoder->parsed()) {
    enc.out = enc_out;
    enc.from_tsv = enc_tsv;
    pcl::commands::make_encoder(enc);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const pcl::SelectionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const pcl::LabelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const pcl::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
