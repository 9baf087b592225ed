#include "pcl/models/cnn.hpp"

#include <cmath>

#include "pcl/errors.hpp"
#include "pcl/io_util.hpp"

namespace pcl {

void CnnConfig::validate() const {
  if (filter_widths.empty()) throw ConfigError("cnn: filter_widths must be non-empty");
  for (int w : filter_widths) {
    if (w < 1) throw ConfigError("cnn: filter width must be positive");
    if (w > max_len) throw ConfigError("cnn: filter width exceeds max_len");
  }
  if (filters_per_width < 1 || filters_per_width > 300)
    throw ConfigError("cnn: filters_per_width must be in [1, 300]");
  if (dropout_rate < 0 || dropout_rate >= 1)
    throw ConfigError("cnn: dropout_rate must be in [0, 1)");
  if (max_len < 1) throw ConfigError("cnn: max_len must be >= 1");
}

int CnnConfig::feature_count() const {
  return static_cast<int>(filter_widths.size()) * filters_per_width;
}

namespace {

struct CnnData final : EncodedData {
  Eigen::MatrixXi ids;  // B x max_len
  std::size_t size() const override { return static_cast<std::size_t>(ids.rows()); }
};

}  // namespace

struct CnnModel::Cache {
  std::vector<Eigen::MatrixXd> x;        // per example: L x d embedded input
  std::vector<Eigen::MatrixXi> argmax;   // per width: B x filters pooled position
  std::vector<Eigen::MatrixXd> pre_max;  // per width: B x filters pre-ReLU value at argmax
  Eigen::MatrixXd features;              // B x F after dropout
  Eigen::MatrixXd mask;                  // B x F dropout mask (already scaled)
  Eigen::MatrixXd probs;
};

CnnModel::CnnModel(CnnConfig config, const Vocabulary& vocab, const EmbeddingTable& embeddings,
                   std::uint64_t seed)
    : config_(std::move(config)),
      vocab_(vocab),
      dim_(embeddings.dimension),
      dropout_rng_(mix_seed(seed, 11)) {
  config_.validate();
  if (embeddings.matrix.rows() != vocab_.size())
    throw ConfigError("embedding table rows do not match vocabulary size");

  std::mt19937_64 init_rng(mix_seed(seed, 10));
  params_.add("embedding", embeddings.matrix);
  for (int w : config_.filter_widths) {
    const int fan_in = w * dim_;
    const double bound = std::sqrt(6.0 / (fan_in + 1));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd weight(config_.filters_per_width, fan_in);
    for (Eigen::Index i = 0; i < weight.rows(); ++i)
      for (Eigen::Index j = 0; j < weight.cols(); ++j) weight(i, j) = dist(init_rng);
    params_.add("conv_w" + std::to_string(w) + "_weight", weight);
    params_.add("conv_w" + std::to_string(w) + "_bias",
                Eigen::MatrixXd::Zero(config_.filters_per_width, 1));
  }
  const int features = config_.feature_count();
  const double bound = std::sqrt(6.0 / (features + 2));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Eigen::MatrixXd head(2, features);
  for (Eigen::Index i = 0; i < head.rows(); ++i)
    for (Eigen::Index j = 0; j < head.cols(); ++j) head(i, j) = dist(init_rng);
  params_.add("head_weight", head);
  params_.add("head_bias", Eigen::MatrixXd::Zero(2, 1));
}

std::unique_ptr<EncodedData> CnnModel::encode_records(
    std::span<const ParagraphRecord> records) const {
  std::vector<std::vector<int>> rows;
  rows.reserve(records.size());
  for (const auto& rec : records)
    rows.push_back(encode(tokenize(rec.text), vocab_, config_.max_len));
  return encode_rows(rows);
}

std::unique_ptr<EncodedData> CnnModel::encode_rows(
    const std::vector<std::vector<int>>& id_rows) const {
  auto data = std::make_unique<CnnData>();
  data->ids.resize(static_cast<Eigen::Index>(id_rows.size()), config_.max_len);
  for (std::size_t i = 0; i < id_rows.size(); ++i) {
    if (static_cast<int>(id_rows[i].size()) != config_.max_len)
      throw ValidationError("encoded row length does not match max_len");
    for (int j = 0; j < config_.max_len; ++j) {
      const int id = id_rows[i][static_cast<std::size_t>(j)];
      if (id < 0 || id >= vocab_.size()) throw ValidationError("token index out of range");
      data->ids(static_cast<Eigen::Index>(i), j) = id;
    }
  }
  return data;
}

Eigen::MatrixXd CnnModel::run(const EncodedData& data, std::span<const int> index, Mode mode,
                              Cache* cache) {
  const auto* cnn_data = dynamic_cast<const CnnData*>(&data);
  if (!cnn_data) throw ConfigError("cnn received foreign encoded data");

  const auto& embedding = params_.get("embedding").value;
  const auto& head_w = params_.get("head_weight").value;
  const auto& head_b = params_.get("head_bias").value;
  const int B = static_cast<int>(index.size());
  const int L = config_.max_len;
  const int F = config_.feature_count();

  Eigen::MatrixXd features(B, F);
  if (cache) {
    cache->x.resize(static_cast<std::size_t>(B));
    cache->argmax.assign(config_.filter_widths.size(), Eigen::MatrixXi(B, config_.filters_per_width));
    cache->pre_max.assign(config_.filter_widths.size(), Eigen::MatrixXd(B, config_.filters_per_width));
  }

  for (int b = 0; b < B; ++b) {
    const Eigen::Index row = index[static_cast<std::size_t>(b)];
    Eigen::MatrixXd x(L, dim_);
    for (int t = 0; t < L; ++t) x.row(t) = embedding.row(cnn_data->ids(row, t));

    int feature = 0;
    for (std::size_t wi = 0; wi < config_.filter_widths.size(); ++wi) {
      const int w = config_.filter_widths[wi];
      const auto& conv_w = params_.get("conv_w" + std::to_string(w) + "_weight").value;
      const auto& conv_b = params_.get("conv_w" + std::to_string(w) + "_bias").value;
      const int positions = L - w + 1;
      for (int f = 0; f < config_.filters_per_width; ++f) {
        double best = -std::numeric_limits<double>::infinity();
        int best_t = 0;
        for (int t = 0; t < positions; ++t) {
          double s = conv_b(f, 0);
          for (int i = 0; i < w; ++i)
            s += conv_w.row(f).segment(i * dim_, dim_).dot(x.row(t + i));
          if (s > best) {
            best = s;
            best_t = t;
          }
        }
        features(b, feature) = std::max(best, 0.0);  // ReLU after max over time
        if (cache) {
          cache->argmax[wi](b, f) = best_t;
          cache->pre_max[wi](b, f) = best;
        }
        ++feature;
      }
    }
    if (cache) cache->x[static_cast<std::size_t>(b)] = std::move(x);
  }

  // Inverted dropout on the pooled feature vector.
  Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(B, F);
  if (mode == Mode::Train && config_.dropout_rate > 0) {
    std::bernoulli_distribution keep(1.0 - config_.dropout_rate);
    const double scale = 1.0 / (1.0 - config_.dropout_rate);
    for (int b = 0; b < B; ++b)
      for (int f = 0; f < F; ++f) mask(b, f) = keep(dropout_rng_) ? scale : 0.0;
    features = features.cwiseProduct(mask);
  }

  Eigen::MatrixXd logits = features * head_w.transpose();
  logits.rowwise() += head_b.col(0).transpose();
  Eigen::MatrixXd probs = softmax_rows(logits);
  if (!probs.allFinite()) throw NumericError("cnn: non-finite activation");

  if (cache) {
    cache->features = std::move(features);
    cache->mask = std::move(mask);
    cache->probs = probs;
  }
  return probs;
}

Eigen::MatrixXd CnnModel::forward(const EncodedData& data, std::span<const int> index, Mode mode) {
  return run(data, index, mode, nullptr);
}

double CnnModel::forward_backward(const EncodedData& data, std::span<const int> index,
                                  std::span<const int> labels) {
  const auto* cnn_data = dynamic_cast<const CnnData*>(&data);
  if (!cnn_data) throw ConfigError("cnn received foreign encoded data");
  Cache cache;
  run(data, index, Mode::Train, &cache);
  const double loss = cross_entropy(cache.probs, labels);

  auto& emb = params_.get("embedding");
  auto& head_w = params_.get("head_weight");
  auto& head_b = params_.get("head_bias");
  const int B = static_cast<int>(index.size());

  const Eigen::MatrixXd dlogits = cross_entropy_logit_grad(cache.probs, labels);  // B x 2
  head_w.grad += dlogits.transpose() * cache.features;
  head_b.grad.col(0) += dlogits.colwise().sum().transpose();
  Eigen::MatrixXd dfeatures = dlogits * head_w.value;  // B x F
  dfeatures = dfeatures.cwiseProduct(cache.mask);      // dropout is elementwise scaling

  for (int b = 0; b < B; ++b) {
    const auto& x = cache.x[static_cast<std::size_t>(b)];
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    int feature = 0;
    for (std::size_t wi = 0; wi < config_.filter_widths.size(); ++wi) {
      const int w = config_.filter_widths[wi];
      auto& conv_w = params_.get("conv_w" + std::to_string(w) + "_weight");
      auto& conv_b = params_.get("conv_w" + std::to_string(w) + "_bias");
      for (int f = 0; f < config_.filters_per_width; ++f, ++feature) {
        if (cache.pre_max[wi](b, f) <= 0) continue;  // ReLU gate closed
        const double ds = dfeatures(b, feature);
        if (ds == 0) continue;
        const int t = cache.argmax[wi](b, f);
        for (int i = 0; i < w; ++i) {
          conv_w.grad.row(f).segment(i * dim_, dim_) += ds * x.row(t + i);
          dx.row(t + i) += ds * conv_w.value.row(f).segment(i * dim_, dim_);
        }
        conv_b.grad(f, 0) += ds;
      }
    }
    const Eigen::Index row = index[static_cast<std::size_t>(b)];
    for (Eigen::Index t = 0; t < x.rows(); ++t)
      emb.grad.row(cnn_data->ids(row, static_cast<int>(t))) += dx.row(t);
  }
  return loss;
}

}  // namespace pcl
