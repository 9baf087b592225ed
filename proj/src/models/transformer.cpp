#include "pcl/models/transformer.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "pcl/checkpoint.hpp"
#include "pcl/errors.hpp"
#include "pcl/io_util.hpp"

namespace pcl {

namespace {

constexpr double kLnEps = 1e-5;

struct TransformerData final : EncodedData {
  std::vector<std::vector<int>> ids;
  std::size_t truncated = 0;
  std::size_t size() const override { return ids.size(); }
};

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline double gelu_grad(double x) {
  const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * phi;
}

// Row-wise layer norm with cached normalized values and inverse stddev.
struct LnCache {
  Eigen::MatrixXd xhat;
  Eigen::VectorXd inv_std;
};

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& gamma,
                           const Eigen::VectorXd& beta, LnCache* cache) {
  const Eigen::Index rows = x.rows(), cols = x.cols();
  Eigen::MatrixXd out(rows, cols);
  if (cache) {
    cache->xhat.resize(rows, cols);
    cache->inv_std.resize(rows);
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::ArrayXd xr = x.row(r).transpose().array();
    const double mu = xr.mean();
    const double var = (xr - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    const Eigen::ArrayXd xhat = (xr - mu) * inv;
    out.row(r) = (xhat * gamma.array() + beta.array()).matrix().transpose();
    if (cache) {
      cache->xhat.row(r) = xhat.matrix().transpose();
      cache->inv_std(r) = inv;
    }
  }
  return out;
}

Eigen::MatrixXd layer_norm_backward(const Eigen::MatrixXd& dy, const LnCache& cache,
                                    const Eigen::VectorXd& gamma, Eigen::MatrixXd& dgamma,
                                    Eigen::MatrixXd& dbeta) {
  const Eigen::Index rows = dy.rows(), cols = dy.cols();
  Eigen::MatrixXd dx(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::ArrayXd dyr = dy.row(r).transpose().array();
    const Eigen::ArrayXd xhat = cache.xhat.row(r).transpose().array();
    dgamma.col(0).array() += dyr * xhat;
    dbeta.col(0).array() += dyr;
    const Eigen::ArrayXd dxhat = dyr * gamma.array();
    const double m1 = dxhat.mean();
    const double m2 = (dxhat * xhat).mean();
    dx.row(r) = (cache.inv_std(r) * (dxhat - m1 - xhat * m2)).matrix().transpose();
  }
  return dx;
}

}  // namespace

void TransformerConfig::validate() const {
  if (dim < 1 || heads < 1 || layers < 1 || ff_dim < 1 || max_positions < 2 || vocab_size < 5)
    throw ConfigError("transformer: incomplete encoder architecture");
  if (dim % heads != 0) throw ConfigError("transformer: dim must be divisible by heads");
  if (max_tokens < 2) throw ConfigError("transformer: max_tokens must be >= 2");
}

int TransformerConfig::effective_max_tokens() const { return std::min(max_tokens, max_positions); }

struct TransformerModel::Trace {
  Eigen::MatrixXd emb;  // pre-LN embedding sum
  LnCache emb_ln;
  struct Layer {
    Eigen::MatrixXd x_in, q, k, v, concat, attn_out, y1, h1, g;
    std::vector<Eigen::MatrixXd> attn;  // per head: T x T softmax rows
    LnCache ln1, ln2;
  };
  std::vector<Layer> layers;
  Eigen::VectorXd cls;
};

TransformerModel::TransformerModel(TransformerConfig config, SubwordTokenizer tokenizer,
                                   std::uint64_t seed)
    : config_(std::move(config)), tokenizer_(std::move(tokenizer)) {
  config_.vocab_size = tokenizer_.vocab_size();
  config_.validate();

  std::mt19937_64 rng(mix_seed(seed, 12));
  std::normal_distribution<double> dist(0.0, 0.02);
  auto normal = [&](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
  };
  const int d = config_.dim;
  params_.add("tok_embedding", normal(config_.vocab_size, d));
  params_.add("pos_embedding", normal(config_.max_positions, d));
  params_.add("emb_ln_gamma", Eigen::MatrixXd::Ones(d, 1));
  params_.add("emb_ln_beta", Eigen::MatrixXd::Zero(d, 1));
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + "_";
    for (const char* name : {"wq", "wk", "wv", "wo"}) params_.add(p + name, normal(d, d));
    for (const char* name : {"bq", "bk", "bv", "bo"})
      params_.add(p + name, Eigen::MatrixXd::Zero(d, 1));
    params_.add(p + "ln1_gamma", Eigen::MatrixXd::Ones(d, 1));
    params_.add(p + "ln1_beta", Eigen::MatrixXd::Zero(d, 1));
    params_.add(p + "ffn_w1", normal(d, config_.ff_dim));
    params_.add(p + "ffn_b1", Eigen::MatrixXd::Zero(config_.ff_dim, 1));
    params_.add(p + "ffn_w2", normal(config_.ff_dim, d));
    params_.add(p + "ffn_b2", Eigen::MatrixXd::Zero(d, 1));
    params_.add(p + "ln2_gamma", Eigen::MatrixXd::Ones(d, 1));
    params_.add(p + "ln2_beta", Eigen::MatrixXd::Zero(d, 1));
  }
  params_.add("head_weight", Eigen::MatrixXd::Zero(2, d));
  params_.add("head_bias", Eigen::MatrixXd::Zero(2, 1));
  init_head(seed);
}

void TransformerModel::init_head(std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 10));
  const double bound = std::sqrt(6.0 / (config_.dim + 2));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto& head = params_.get("head_weight").value;
  for (Eigen::Index i = 0; i < head.rows(); ++i)
    for (Eigen::Index j = 0; j < head.cols(); ++j) head(i, j) = dist(rng);
  params_.get("head_bias").value.setZero();
}

std::unique_ptr<TransformerModel> TransformerModel::from_encoder_archive(
    const std::filesystem::path& path, int max_tokens, std::uint64_t seed) {
  if (!std::filesystem::exists(path))
    throw InputError("encoder weights not found: " + path.string());
  ParameterStore loaded;
  Archive archive = Archive::load(path, loaded);
  const auto& meta = archive.meta();
  if (meta.value("kind", "") != "encoder")
    throw FormatError("archive is not an encoder: " + path.string());

  TransformerConfig config;
  config.encoder_id = meta.value("encoder_id", "");
  config.max_tokens = max_tokens;
  const auto& arch = meta.at("config");
  config.dim = arch.at("dim").get<int>();
  config.heads = arch.at("heads").get<int>();
  config.layers = arch.at("layers").get<int>();
  config.ff_dim = arch.at("ff_dim").get<int>();
  config.max_positions = arch.at("max_positions").get<int>();

  std::vector<std::string> vocab = meta.at("tokenizer_vocab").get<std::vector<std::string>>();
  auto model = std::make_unique<TransformerModel>(config, SubwordTokenizer(std::move(vocab)), seed);
  for (const auto& tensor : loaded.tensors()) {
    auto& dst = model->params_.get(tensor.name);
    if (dst.value.rows() != tensor.value.rows() || dst.value.cols() != tensor.value.cols())
      throw FormatError("encoder tensor shape mismatch for " + tensor.name + ": " + path.string());
    dst.value = tensor.value;
  }
  return model;
}

void TransformerModel::save_encoder_archive(const std::filesystem::path& path) const {
  ParameterStore encoder_only;
  for (const auto& t : params_.tensors())
    if (t.name != "head_weight" && t.name != "head_bias") encoder_only.add(t.name, t.value);

  Archive archive;
  archive.meta() = {{"kind", "encoder"},
                    {"encoder_id", config_.encoder_id},
                    {"config",
                     {{"dim", config_.dim},
                      {"heads", config_.heads},
                      {"layers", config_.layers},
                      {"ff_dim", config_.ff_dim},
                      {"max_positions", config_.max_positions},
                      {"vocab_size", config_.vocab_size}}},
                    {"tokenizer_vocab", tokenizer_.vocab()}};
  archive.save(path, encoder_only);
}

std::unique_ptr<EncodedData> TransformerModel::encode_texts(const std::vector<std::string>& texts,
                                                            std::size_t* truncated_count) const {
  auto data = std::make_unique<TransformerData>();
  data->ids.reserve(texts.size());
  for (const auto& text : texts) {
    bool truncated = false;
    data->ids.push_back(tokenizer_.encode(text, config_.effective_max_tokens(), &truncated));
    if (truncated) ++data->truncated;
  }
  if (truncated_count) *truncated_count = data->truncated;
  return data;
}

std::unique_ptr<EncodedData> TransformerModel::encode_records(
    std::span<const ParagraphRecord> records) const {
  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& rec : records) texts.push_back(rec.text);
  return encode_texts(texts);
}

Eigen::Vector2d TransformerModel::forward_one(const std::vector<int>& ids, Trace* trace) {
  const int T = static_cast<int>(ids.size());
  const int d = config_.dim;
  const int heads = config_.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  const auto& tok = params_.get("tok_embedding").value;
  const auto& pos = params_.get("pos_embedding").value;

  Eigen::MatrixXd x(T, d);
  for (int t = 0; t < T; ++t) {
    const int id = ids[static_cast<std::size_t>(t)];
    if (id < 0 || id >= config_.vocab_size) throw ValidationError("subword index out of range");
    x.row(t) = tok.row(id) + pos.row(t);
  }
  if (trace) {
    trace->emb = x;
    trace->layers.resize(static_cast<std::size_t>(config_.layers));
  }
  x = layer_norm(x, params_.get("emb_ln_gamma").value.col(0), params_.get("emb_ln_beta").value.col(0),
                 trace ? &trace->emb_ln : nullptr);

  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + "_";
    auto* lt = trace ? &trace->layers[static_cast<std::size_t>(l)] : nullptr;
    if (lt) lt->x_in = x;

    Eigen::MatrixXd q = x * params_.get(p + "wq").value;
    q.rowwise() += params_.get(p + "bq").value.col(0).transpose();
    Eigen::MatrixXd k = x * params_.get(p + "wk").value;
    k.rowwise() += params_.get(p + "bk").value.col(0).transpose();
    Eigen::MatrixXd v = x * params_.get(p + "wv").value;
    v.rowwise() += params_.get(p + "bv").value.col(0).transpose();

    Eigen::MatrixXd concat(T, d);
    std::vector<Eigen::MatrixXd> attn(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      const auto qh = q.middleCols(h * dh, dh);
      const auto kh = k.middleCols(h * dh, dh);
      const auto vh = v.middleCols(h * dh, dh);
      Eigen::MatrixXd scores = qh * kh.transpose() * scale;
      Eigen::MatrixXd p_attn = softmax_rows(scores);
      concat.middleCols(h * dh, dh) = p_attn * vh;
      attn[static_cast<std::size_t>(h)] = std::move(p_attn);
    }
    Eigen::MatrixXd attn_out = concat * params_.get(p + "wo").value;
    attn_out.rowwise() += params_.get(p + "bo").value.col(0).transpose();

    Eigen::MatrixXd r1 = x + attn_out;
    Eigen::MatrixXd y1 = layer_norm(r1, params_.get(p + "ln1_gamma").value.col(0),
                                    params_.get(p + "ln1_beta").value.col(0),
                                    lt ? &lt->ln1 : nullptr);

    Eigen::MatrixXd h1 = y1 * params_.get(p + "ffn_w1").value;
    h1.rowwise() += params_.get(p + "ffn_b1").value.col(0).transpose();
    Eigen::MatrixXd g = h1.unaryExpr([](double v_) { return gelu(v_); });
    Eigen::MatrixXd f = g * params_.get(p + "ffn_w2").value;
    f.rowwise() += params_.get(p + "ffn_b2").value.col(0).transpose();

    Eigen::MatrixXd r2 = y1 + f;
    Eigen::MatrixXd y2 = layer_norm(r2, params_.get(p + "ln2_gamma").value.col(0),
                                    params_.get(p + "ln2_beta").value.col(0),
                                    lt ? &lt->ln2 : nullptr);
    if (lt) {
      lt->q = std::move(q);
      lt->k = std::move(k);
      lt->v = std::move(v);
      lt->attn = std::move(attn);
      lt->concat = std::move(concat);
      lt->attn_out = std::move(attn_out);
      lt->y1 = std::move(y1);
      lt->h1 = std::move(h1);
      lt->g = std::move(g);
    }
    x = std::move(y2);
  }

  Eigen::VectorXd cls = x.row(0).transpose();
  if (trace) trace->cls = cls;
  Eigen::Vector2d logits = params_.get("head_weight").value * cls + params_.get("head_bias").value.col(0);
  return logits;
}

void TransformerModel::backward_one(const std::vector<int>& ids, const Trace& trace,
                                    const Eigen::Vector2d& dlogits) {
  const int T = static_cast<int>(ids.size());
  const int d = config_.dim;
  const int heads = config_.heads;
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  auto& head_w = params_.get("head_weight");
  auto& head_b = params_.get("head_bias");
  head_w.grad += dlogits * trace.cls.transpose();
  head_b.grad.col(0) += dlogits;

  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(T, d);
  dx.row(0) = (head_w.value.transpose() * dlogits).transpose();

  for (int l = config_.layers - 1; l >= 0; --l) {
    const std::string p = "layer" + std::to_string(l) + "_";
    const auto& lt = trace.layers[static_cast<std::size_t>(l)];

    // LN2
    Eigen::MatrixXd dr2 = layer_norm_backward(dx, lt.ln2, params_.get(p + "ln2_gamma").value.col(0),
                                              params_.get(p + "ln2_gamma").grad,
                                              params_.get(p + "ln2_beta").grad);
    // FFN
    Eigen::MatrixXd dg = dr2 * params_.get(p + "ffn_w2").value.transpose();
    params_.get(p + "ffn_w2").grad += lt.g.transpose() * dr2;
    params_.get(p + "ffn_b2").grad.col(0) += dr2.colwise().sum().transpose();
    Eigen::MatrixXd dh1 =
        dg.cwiseProduct(lt.h1.unaryExpr([](double v_) { return gelu_grad(v_); }));
    params_.get(p + "ffn_w1").grad += lt.y1.transpose() * dh1;
    params_.get(p + "ffn_b1").grad.col(0) += dh1.colwise().sum().transpose();
    Eigen::MatrixXd dy1 = dr2 + dh1 * params_.get(p + "ffn_w1").value.transpose();

    // LN1
    Eigen::MatrixXd dr1 = layer_norm_backward(dy1, lt.ln1, params_.get(p + "ln1_gamma").value.col(0),
                                              params_.get(p + "ln1_gamma").grad,
                                              params_.get(p + "ln1_beta").grad);
    // Attention projection
    Eigen::MatrixXd dconcat = dr1 * params_.get(p + "wo").value.transpose();
    params_.get(p + "wo").grad += lt.concat.transpose() * dr1;
    params_.get(p + "bo").grad.col(0) += dr1.colwise().sum().transpose();

    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(T, d);
    Eigen::MatrixXd dk = Eigen::MatrixXd::Zero(T, d);
    Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(T, d);
    for (int h = 0; h < heads; ++h) {
      const auto& p_attn = lt.attn[static_cast<std::size_t>(h)];
      const auto qh = lt.q.middleCols(h * dh, dh);
      const auto kh = lt.k.middleCols(h * dh, dh);
      const auto vh = lt.v.middleCols(h * dh, dh);
      const auto doh = dconcat.middleCols(h * dh, dh);

      Eigen::MatrixXd dp = doh * vh.transpose();
      dv.middleCols(h * dh, dh) = p_attn.transpose() * doh;
      Eigen::MatrixXd ds(T, T);
      for (int r = 0; r < T; ++r) {
        const double dot = dp.row(r).dot(p_attn.row(r));
        ds.row(r) = (dp.row(r).array() - dot) * p_attn.row(r).array();
      }
      dq.middleCols(h * dh, dh) = ds * kh * scale;
      dk.middleCols(h * dh, dh) = ds.transpose() * qh * scale;
    }
    params_.get(p + "wq").grad += lt.x_in.transpose() * dq;
    params_.get(p + "bq").grad.col(0) += dq.colwise().sum().transpose();
    params_.get(p + "wk").grad += lt.x_in.transpose() * dk;
    params_.get(p + "bk").grad.col(0) += dk.colwise().sum().transpose();
    params_.get(p + "wv").grad += lt.x_in.transpose() * dv;
    params_.get(p + "bv").grad.col(0) += dv.colwise().sum().transpose();

    dx = dr1 + dq * params_.get(p + "wq").value.transpose() +
         dk * params_.get(p + "wk").value.transpose() +
         dv * params_.get(p + "wv").value.transpose();
  }

  // Embedding LN, then token/position scatter.
  Eigen::MatrixXd demb = layer_norm_backward(dx, trace.emb_ln, params_.get("emb_ln_gamma").value.col(0),
                                             params_.get("emb_ln_gamma").grad,
                                             params_.get("emb_ln_beta").grad);
  auto& tok = params_.get("tok_embedding");
  auto& pos = params_.get("pos_embedding");
  for (int t = 0; t < T; ++t) {
    tok.grad.row(ids[static_cast<std::size_t>(t)]) += demb.row(t);
    pos.grad.row(t) += demb.row(t);
  }
}

Eigen::MatrixXd TransformerModel::forward(const EncodedData& data, std::span<const int> index,
                                          Mode) {
  const auto* tdata = dynamic_cast<const TransformerData*>(&data);
  if (!tdata) throw ConfigError("transformer received foreign encoded data");
  Eigen::MatrixXd logits(static_cast<Eigen::Index>(index.size()), 2);
  for (std::size_t b = 0; b < index.size(); ++b)
    logits.row(static_cast<Eigen::Index>(b)) =
        forward_one(tdata->ids[static_cast<std::size_t>(index[b])], nullptr).transpose();
  Eigen::MatrixXd probs = softmax_rows(logits);
  if (!probs.allFinite()) throw NumericError("transformer: non-finite activation");
  return probs;
}

double TransformerModel::forward_backward(const EncodedData& data, std::span<const int> index,
                                          std::span<const int> labels) {
  const auto* tdata = dynamic_cast<const TransformerData*>(&data);
  if (!tdata) throw ConfigError("transformer received foreign encoded data");
  const int B = static_cast<int>(index.size());

  std::vector<Trace> traces(static_cast<std::size_t>(B));
  Eigen::MatrixXd logits(B, 2);
  for (int b = 0; b < B; ++b)
    logits.row(b) = forward_one(tdata->ids[static_cast<std::size_t>(index[static_cast<std::size_t>(b)])],
                                &traces[static_cast<std::size_t>(b)])
                        .transpose();
  Eigen::MatrixXd probs = softmax_rows(logits);
  if (!probs.allFinite()) throw NumericError("transformer: non-finite activation");
  const double loss = cross_entropy(probs, labels);
  const Eigen::MatrixXd dlogits = cross_entropy_logit_grad(probs, labels);
  for (int b = 0; b < B; ++b)
    backward_one(tdata->ids[static_cast<std::size_t>(index[static_cast<std::size_t>(b)])],
                 traces[static_cast<std::size_t>(b)], dlogits.row(b).transpose());
  return loss;
}

void write_miniature_encoder(const std::filesystem::path& path, const std::string& encoder_id,
                             const std::vector<std::string>& vocab_texts, int dim, int heads,
                             int layers, int ff_dim, int max_positions, int max_whole_words,
                             std::uint64_t seed) {
  SubwordTokenizer tokenizer(SubwordTokenizer::build_vocab(vocab_texts, max_whole_words));
  TransformerConfig config;
  config.encoder_id = encoder_id;
  config.dim = dim;
  config.heads = heads;
  config.layers = layers;
  config.ff_dim = ff_dim;
  config.max_positions = max_positions;
  config.max_tokens = max_positions;
  TransformerModel model(config, std::move(tokenizer), seed);
  model.save_encoder_archive(path);
}

}  // namespace pcl
