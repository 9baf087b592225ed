#include "pcl/models/bilstm.hpp"

#include <cmath>

#include "pcl/errors.hpp"
#include "pcl/io_util.hpp"

namespace pcl {

void BilstmConfig::validate() const {
  if (hidden_size < 1) throw ConfigError("bilstm: hidden_size must be >= 1");
  if (dropout_rate < 0 || dropout_rate >= 1)
    throw ConfigError("bilstm: dropout_rate must be in [0, 1)");
  if (max_len < 1) throw ConfigError("bilstm: max_len must be >= 1");
}

namespace {

struct BilstmData final : EncodedData {
  Eigen::MatrixXi ids;       // B x max_len
  std::vector<int> lengths;  // unpadded token counts
  std::size_t size() const override { return lengths.size(); }
};

inline Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& a) { return 1.0 / (1.0 + (-a).exp()); }

// One direction's per-step activations for a single example.
struct DirTrace {
  std::vector<int> pos;  // sequence position consumed at each step
  Eigen::MatrixXd i, f, g, o, c, tc, h_prev, c_prev;
  Eigen::VectorXd h_final;
};

}  // namespace

struct BilstmModel::Cache {
  std::vector<Eigen::MatrixXd> x;  // per example: L x d (only first len rows used)
  std::vector<DirTrace> fwd, bwd;
  Eigen::MatrixXd readout;  // B x 2h after dropout
  Eigen::MatrixXd mask;     // B x 2h
  Eigen::MatrixXd probs;
};

BilstmModel::BilstmModel(BilstmConfig config, const Vocabulary& vocab,
                         const EmbeddingTable& embeddings, std::uint64_t seed)
    : config_(config),
      vocab_(vocab),
      dim_(embeddings.dimension),
      dropout_rng_(mix_seed(seed, 11)) {
  config_.validate();
  if (embeddings.matrix.rows() != vocab_.size())
    throw ConfigError("embedding table rows do not match vocabulary size");

  std::mt19937_64 init_rng(mix_seed(seed, 10));
  params_.add("embedding", embeddings.matrix);
  const int h = config_.hidden_size;
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto uniform = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(init_rng);
    return m;
  };
  for (const char* dir : {"fwd", "bwd"}) {
    params_.add(std::string("lstm_") + dir + "_w", uniform(4 * h, dim_));
    params_.add(std::string("lstm_") + dir + "_u", uniform(4 * h, h));
    params_.add(std::string("lstm_") + dir + "_b", Eigen::MatrixXd::Zero(4 * h, 1));
  }
  params_.add("head_weight", uniform(2, 2 * h));
  params_.add("head_bias", Eigen::MatrixXd::Zero(2, 1));
}

std::unique_ptr<EncodedData> BilstmModel::encode_records(
    std::span<const ParagraphRecord> records) const {
  std::vector<std::vector<int>> rows;
  std::vector<int> lengths;
  rows.reserve(records.size());
  for (const auto& rec : records) {
    const auto toks = tokenize(rec.text);
    rows.push_back(encode(toks, vocab_, config_.max_len));
    lengths.push_back(static_cast<int>(std::min<std::size_t>(
        toks.size(), static_cast<std::size_t>(config_.max_len))));
  }
  return encode_rows(rows, lengths);
}

std::unique_ptr<EncodedData> BilstmModel::encode_rows(const std::vector<std::vector<int>>& id_rows,
                                                      const std::vector<int>& lengths) const {
  if (id_rows.size() != lengths.size()) throw ValidationError("rows and lengths disagree");
  auto data = std::make_unique<BilstmData>();
  data->ids.resize(static_cast<Eigen::Index>(id_rows.size()), config_.max_len);
  data->lengths = lengths;
  for (std::size_t i = 0; i < id_rows.size(); ++i) {
    if (static_cast<int>(id_rows[i].size()) != config_.max_len)
      throw ValidationError("encoded row length does not match max_len");
    if (lengths[i] < 0 || lengths[i] > config_.max_len)
      throw ValidationError("sequence length out of range");
    for (int j = 0; j < config_.max_len; ++j) {
      const int id = id_rows[i][static_cast<std::size_t>(j)];
      if (id < 0 || id >= vocab_.size()) throw ValidationError("token index out of range");
      data->ids(static_cast<Eigen::Index>(i), j) = id;
    }
  }
  return data;
}

Eigen::MatrixXd BilstmModel::run(const EncodedData& data, std::span<const int> index, Mode mode,
                                 Cache* cache) {
  const auto* lstm_data = dynamic_cast<const BilstmData*>(&data);
  if (!lstm_data) throw ConfigError("bilstm received foreign encoded data");

  const auto& embedding = params_.get("embedding").value;
  const int B = static_cast<int>(index.size());
  const int h = config_.hidden_size;

  if (cache) {
    cache->x.resize(static_cast<std::size_t>(B));
    cache->fwd.resize(static_cast<std::size_t>(B));
    cache->bwd.resize(static_cast<std::size_t>(B));
  }

  Eigen::MatrixXd readout(B, 2 * h);
  for (int b = 0; b < B; ++b) {
    const Eigen::Index row = index[static_cast<std::size_t>(b)];
    const int len = lstm_data->lengths[static_cast<std::size_t>(row)];
    Eigen::MatrixXd x(std::max(len, 1), dim_);
    for (int t = 0; t < len; ++t) x.row(t) = embedding.row(lstm_data->ids(row, t));

    for (int d = 0; d < 2; ++d) {
      const bool forward_dir = d == 0;
      const auto& w = params_.get(forward_dir ? "lstm_fwd_w" : "lstm_bwd_w").value;
      const auto& u = params_.get(forward_dir ? "lstm_fwd_u" : "lstm_bwd_u").value;
      const auto& bias = params_.get(forward_dir ? "lstm_fwd_b" : "lstm_bwd_b").value;

      DirTrace trace;
      if (cache) {
        trace.pos.resize(static_cast<std::size_t>(len));
        for (auto* m : {&trace.i, &trace.f, &trace.g, &trace.o, &trace.c, &trace.tc,
                        &trace.h_prev, &trace.c_prev})
          m->resize(h, std::max(len, 1));
      }
      Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
      Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
      for (int s = 0; s < len; ++s) {
        const int t = forward_dir ? s : len - 1 - s;
        Eigen::VectorXd a = w * x.row(t).transpose() + u * h_prev + bias.col(0);
        Eigen::ArrayXd gi = sigmoid(a.segment(0, h).array());
        Eigen::ArrayXd gf = sigmoid(a.segment(h, h).array());
        Eigen::ArrayXd gg = a.segment(2 * h, h).array().tanh();
        Eigen::ArrayXd go = sigmoid(a.segment(3 * h, h).array());
        Eigen::ArrayXd c = gf * c_prev.array() + gi * gg;
        Eigen::ArrayXd tc = c.tanh();
        Eigen::VectorXd hv = (go * tc).matrix();
        if (cache) {
          trace.pos[static_cast<std::size_t>(s)] = t;
          trace.i.col(s) = gi.matrix();
          trace.f.col(s) = gf.matrix();
          trace.g.col(s) = gg.matrix();
          trace.o.col(s) = go.matrix();
          trace.c.col(s) = c.matrix();
          trace.tc.col(s) = tc.matrix();
          trace.h_prev.col(s) = h_prev;
          trace.c_prev.col(s) = c_prev;
        }
        h_prev = hv;
        c_prev = c.matrix();
      }
      readout.block(b, forward_dir ? 0 : h, 1, h) = h_prev.transpose();
      if (cache) {
        trace.h_final = h_prev;
        (forward_dir ? cache->fwd : cache->bwd)[static_cast<std::size_t>(b)] = std::move(trace);
      }
    }
    if (cache) cache->x[static_cast<std::size_t>(b)] = std::move(x);
  }

  Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(B, 2 * h);
  if (mode == Mode::Train && config_.dropout_rate > 0) {
    std::bernoulli_distribution keep(1.0 - config_.dropout_rate);
    const double scale = 1.0 / (1.0 - config_.dropout_rate);
    for (int b = 0; b < B; ++b)
      for (int j = 0; j < 2 * h; ++j) mask(b, j) = keep(dropout_rng_) ? scale : 0.0;
    readout = readout.cwiseProduct(mask);
  }

  const auto& head_w = params_.get("head_weight").value;
  const auto& head_b = params_.get("head_bias").value;
  Eigen::MatrixXd logits = readout * head_w.transpose();
  logits.rowwise() += head_b.col(0).transpose();
  Eigen::MatrixXd probs = softmax_rows(logits);
  if (!probs.allFinite()) throw NumericError("bilstm: non-finite activation");

  if (cache) {
    cache->readout = std::move(readout);
    cache->mask = std::move(mask);
    cache->probs = probs;
  }
  return probs;
}

Eigen::MatrixXd BilstmModel::forward(const EncodedData& data, std::span<const int> index,
                                     Mode mode) {
  return run(data, index, mode, nullptr);
}

double BilstmModel::forward_backward(const EncodedData& data, std::span<const int> index,
                                     std::span<const int> labels) {
  const auto* lstm_data = dynamic_cast<const BilstmData*>(&data);
  if (!lstm_data) throw ConfigError("bilstm received foreign encoded data");
  Cache cache;
  run(data, index, Mode::Train, &cache);
  const double loss = cross_entropy(cache.probs, labels);

  auto& emb = params_.get("embedding");
  auto& head_w = params_.get("head_weight");
  auto& head_b = params_.get("head_bias");
  const int B = static_cast<int>(index.size());
  const int h = config_.hidden_size;

  const Eigen::MatrixXd dlogits = cross_entropy_logit_grad(cache.probs, labels);
  head_w.grad += dlogits.transpose() * cache.readout;
  head_b.grad.col(0) += dlogits.colwise().sum().transpose();
  Eigen::MatrixXd dreadout = dlogits * head_w.value;  // B x 2h
  dreadout = dreadout.cwiseProduct(cache.mask);

  for (int b = 0; b < B; ++b) {
    const Eigen::Index row = index[static_cast<std::size_t>(b)];
    const int len = lstm_data->lengths[static_cast<std::size_t>(row)];
    if (len == 0) continue;
    const auto& x = cache.x[static_cast<std::size_t>(b)];
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(x.rows(), x.cols());

    for (int d = 0; d < 2; ++d) {
      const bool forward_dir = d == 0;
      const auto& trace = (forward_dir ? cache.fwd : cache.bwd)[static_cast<std::size_t>(b)];
      auto& w = params_.get(forward_dir ? "lstm_fwd_w" : "lstm_bwd_w");
      auto& u = params_.get(forward_dir ? "lstm_fwd_u" : "lstm_bwd_u");
      auto& bias = params_.get(forward_dir ? "lstm_fwd_b" : "lstm_bwd_b");

      Eigen::VectorXd dh = dreadout.block(b, forward_dir ? 0 : h, 1, h).transpose();
      Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
      for (int s = len - 1; s >= 0; --s) {
        const Eigen::ArrayXd gi = trace.i.col(s).array();
        const Eigen::ArrayXd gf = trace.f.col(s).array();
        const Eigen::ArrayXd gg = trace.g.col(s).array();
        const Eigen::ArrayXd go = trace.o.col(s).array();
        const Eigen::ArrayXd tc = trace.tc.col(s).array();

        const Eigen::ArrayXd dgo = dh.array() * tc;
        const Eigen::ArrayXd dc = dc_next.array() + dh.array() * go * (1.0 - tc * tc);
        const Eigen::ArrayXd dgi = dc * gg;
        const Eigen::ArrayXd dgg = dc * gi;
        const Eigen::ArrayXd dgf = dc * trace.c_prev.col(s).array();

        Eigen::VectorXd da(4 * h);
        da.segment(0, h) = (dgi * gi * (1.0 - gi)).matrix();
        da.segment(h, h) = (dgf * gf * (1.0 - gf)).matrix();
        da.segment(2 * h, h) = (dgg * (1.0 - gg * gg)).matrix();
        da.segment(3 * h, h) = (dgo * go * (1.0 - go)).matrix();

        const int t = trace.pos[static_cast<std::size_t>(s)];
        w.grad += da * x.row(t);
        u.grad += da * trace.h_prev.col(s).transpose();
        bias.grad.col(0) += da;
        dx.row(t) += (w.value.transpose() * da).transpose();

        dh = u.value.transpose() * da;
        dc_next = (dc * gf).matrix();
      }
    }
    for (int t = 0; t < len; ++t) emb.grad.row(lstm_data->ids(row, t)) += dx.row(t);
  }
  return loss;
}

}  // namespace pcl
