#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "pcl/embedding.hpp"
#include "pcl/models/cnn.hpp"
#include "support.hpp"

using namespace pcl;

namespace {

// Vocabulary {<pad>, <unk>, w0, w1, ...} with n_words real words.
Vocabulary make_vocab(int n_words) {
  std::string text;
  for (int i = 0; i < n_words; ++i) text += "w" + std::to_string(i) + " ";
  std::vector<ParagraphRecord> records{pcl::test::record("p1", "k", text, 0)};
  return Vocabulary::build(records, 1);
}

CnnModel make_model(const CnnConfig& config, int n_words, int dim, std::uint64_t seed) {
  const Vocabulary vocab = make_vocab(n_words);
  std::mt19937_64 rng(seed + 1000);
  const EmbeddingTable table = EmbeddingTable::random(dim, vocab, rng);
  return CnnModel(config, vocab, table, seed);
}

// Independent plain-loop reimplementation of embed -> conv -> ReLU -> max-pool
// -> affine -> softmax for one example.
std::array<double, 2> cnn_oracle(const CnnModel& model_const, const std::vector<int>& ids,
                                 const CnnConfig& config, int dim) {
  auto& model = const_cast<CnnModel&>(model_const);
  const auto& emb = model.params().get("embedding").value;
  std::vector<double> features;
  for (int w : config.filter_widths) {
    const auto& weight = model.params().get("conv_w" + std::to_string(w) + "_weight").value;
    const auto& bias = model.params().get("conv_w" + std::to_string(w) + "_bias").value;
    for (int f = 0; f < config.filters_per_width; ++f) {
      double best = -1e300;
      for (std::size_t t = 0; t + static_cast<std::size_t>(w) <= ids.size(); ++t) {
        double s = bias(f, 0);
        for (int i = 0; i < w; ++i)
          for (int j = 0; j < dim; ++j)
            s += weight(f, i * dim + j) * emb(ids[t + static_cast<std::size_t>(i)], j);
        if (s > best) best = s;
      }
      features.push_back(best > 0 ? best : 0.0);
    }
  }
  const auto& head_w = model.params().get("head_weight").value;
  const auto& head_b = model.params().get("head_bias").value;
  double logits[2];
  for (int c = 0; c < 2; ++c) {
    logits[c] = head_b(c, 0);
    for (std::size_t k = 0; k < features.size(); ++k)
      logits[c] += head_w(c, static_cast<Eigen::Index>(k)) * features[k];
  }
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m), e1 = std::exp(logits[1] - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

}  // namespace

TEST_CASE("all-PAD input with a zero output layer gives the uniform distribution") {
  CnnConfig config;
  config.max_len = 8;
  config.dropout_rate = 0.0;
  auto model = make_model(config, 6, 4, 3);
  model.params().get("head_weight").value.setZero();
  model.params().get("head_bias").value.setZero();

  auto data = model.encode_rows({std::vector<int>(8, Vocabulary::kPad)});
  const auto probs = model.forward(*data, std::vector<int>{0}, Mode::Eval);
  CHECK(probs(0, 0) == doctest::Approx(0.5));
  CHECK(probs(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("forward emits one normalized row per batch example") {
  CnnConfig config;
  config.max_len = 12;
  config.dropout_rate = 0.0;
  auto model = make_model(config, 10, 5, 11);

  std::mt19937_64 rng(4);
  std::vector<std::vector<int>> rows;
  for (int b = 0; b < 7; ++b) {
    std::vector<int> row(12, Vocabulary::kPad);
    const int len = 1 + static_cast<int>(rng() % 12);
    for (int t = 0; t < len; ++t) row[static_cast<std::size_t>(t)] = static_cast<int>(rng() % 12);
    rows.push_back(row);
  }
  auto data = model.encode_rows(rows);
  std::vector<int> index{0, 1, 2, 3, 4, 5, 6};
  const auto probs = model.forward(*data, index, Mode::Eval);
  REQUIRE(probs.rows() == 7);
  REQUIRE(probs.cols() == 2);
  for (int b = 0; b < 7; ++b) {
    CHECK(probs.row(b).sum() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(probs.minCoeff() >= 0.0);
  }
}

TEST_CASE("forward matches an independent plain-loop oracle to 1e-10") {
  CnnConfig config;
  config.max_len = 9;
  config.filter_widths = {2, 3};
  config.filters_per_width = 2;
  config.dropout_rate = 0.0;
  auto model = make_model(config, 8, 4, 21);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> row(9);
    for (auto& id : row) id = static_cast<int>(rng() % 10);
    auto data = model.encode_rows({row});
    const auto probs = model.forward(*data, std::vector<int>{0}, Mode::Eval);
    const auto expect = cnn_oracle(model, row, config, 4);
    CHECK(probs(0, 0) == doctest::Approx(expect[0]).epsilon(1e-10));
    CHECK(probs(0, 1) == doctest::Approx(expect[1]).epsilon(1e-10));
  }
}

TEST_CASE("permuting the batch permutes the outputs identically") {
  CnnConfig config;
  config.max_len = 6;
  config.dropout_rate = 0.0;
  auto model = make_model(config, 6, 3, 9);
  auto data = model.encode_rows({{2, 3, 4, 0, 0, 0}, {5, 5, 2, 3, 0, 0}, {7, 2, 0, 0, 0, 0}});

  const auto straight = model.forward(*data, std::vector<int>{0, 1, 2}, Mode::Eval);
  const auto permuted = model.forward(*data, std::vector<int>{2, 0, 1}, Mode::Eval);
  CHECK((permuted.row(0) - straight.row(2)).norm() == doctest::Approx(0.0));
  CHECK((permuted.row(1) - straight.row(0)).norm() == doctest::Approx(0.0));
  CHECK((permuted.row(2) - straight.row(1)).norm() == doctest::Approx(0.0));
}

TEST_CASE("analytic gradients match central finite differences") {
  CnnConfig config;
  config.max_len = 7;
  config.filter_widths = {2, 3};
  config.filters_per_width = 2;
  config.dropout_rate = 0.0;  // gradcheck needs the deterministic path
  auto model = make_model(config, 8, 4, 5);

  // Full-length sequences: all-PAD windows sit exactly on the ReLU kink and
  // tie with each other, which breaks finite differences (not the analytic
  // subgradient).
  auto data = model.encode_rows({{2, 3, 4, 5, 6, 7, 8}, {7, 8, 9, 2, 4, 3, 5}});
  const double err = pcl::test::max_gradient_error(model, *data, {0, 1}, {1, 0});
  CHECK(err < 1e-4);
}

TEST_CASE("parameter count matches the hand count") {
  // V=10, d=4, one width-2 filter: embed 40 + conv (2*4*1 + 1) + head (2*1+2) = 53.
  CnnConfig config;
  config.max_len = 6;
  config.filter_widths = {2};
  config.filters_per_width = 1;
  auto model = make_model(config, 8, 4, 2);  // 8 words + PAD/UNK = 10 rows
  CHECK(model.params().count_parameters() == 53);

  ParameterStore empty;
  CHECK(empty.count_parameters() == 0);
}

TEST_CASE("dropout masks are reproducible under a fixed seed") {
  CnnConfig config;
  config.max_len = 5;
  config.dropout_rate = 0.5;

  auto grads_with_seed = [&](std::uint64_t seed) {
    auto model = make_model(config, 6, 3, seed);
    auto data = model.encode_rows({{2, 3, 4, 5, 0}});
    model.params().zero_grad();
    model.forward_backward(*data, std::vector<int>{0}, std::vector<int>{1});
    Eigen::MatrixXd g = model.params().get("head_weight").grad;
    return g;
  };
  const Eigen::MatrixXd a = grads_with_seed(33);
  const Eigen::MatrixXd b = grads_with_seed(33);
  const Eigen::MatrixXd c = grads_with_seed(34);
  CHECK((a - b).norm() == 0.0);
  CHECK((a - c).norm() > 0.0);
}
