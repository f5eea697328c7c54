#include "triage/encoder.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include "triage/errors.hpp"
#include "triage/rng.hpp"

namespace triage::nn {
namespace {

struct NormCache {
  Matrix xhat;
  Eigen::VectorXd rstd;
};

Matrix layer_norm(const Matrix& x, const Matrix& g, const Matrix& b, double eps, NormCache* c) {
  const Eigen::VectorXd mu = x.rowwise().mean();
  Matrix xc = x.colwise() - mu;
  const Eigen::VectorXd var = xc.array().square().rowwise().mean();
  const Eigen::VectorXd rstd = (var.array() + eps).rsqrt();
  Matrix xhat = xc.array().colwise() * rstd.array();
  Matrix y = (xhat.array().rowwise() * g.row(0).array()).rowwise() + b.row(0).array();
  if (c) {
    c->xhat = std::move(xhat);
    c->rstd = rstd;
  }
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& g, const NormCache& c, Matrix& dg,
                           Matrix& db, double w) {
  dg.row(0) += w * (dy.array() * c.xhat.array()).colwise().sum().matrix();
  db.row(0) += w * dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * g.row(0).array();
  const Eigen::VectorXd m1 = dxhat.rowwise().mean();
  const Eigen::VectorXd m2 = (dxhat.array() * c.xhat.array()).rowwise().mean();
  Matrix dx = dxhat;
  dx.colwise() -= m1;
  dx.array() -= c.xhat.array().colwise() * m2.array();
  dx.array().colwise() *= c.rstd.array();
  return dx;
}

void add_bias(Matrix& x, const Matrix& b) { x.rowwise() += b.row(0); }

Matrix softmax_rows(const Matrix& s) {
  Matrix a = s;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    const double mx = a.row(r).maxCoeff();
    a.row(r) = (a.row(r).array() - mx).exp();
    a.row(r) /= a.row(r).sum();
  }
  return a;
}

constexpr std::uint32_t kMagic = 0x57475254;  // "TRGW"

}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) +
         x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

void EncoderConfig::validate() const {
  if (vocab_size < 5) throw ConfigError("encoder vocabulary too small");
  if (max_positions < 3) throw ConfigError("encoder needs at least 3 positions");
  if (d_model == 0 || heads == 0 || d_model % heads != 0) {
    throw ConfigError("d_model must be a positive multiple of heads");
  }
  if (ffn == 0 || layers == 0 || num_labels < 2) throw ConfigError("bad encoder dimensions");
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"vocab_size", vocab_size}, {"max_positions", max_positions}, {"d_model", d_model},
          {"heads", heads},           {"ffn", ffn},                     {"layers", layers},
          {"num_labels", num_labels}, {"init_std", init_std},           {"ln_eps", ln_eps},
          {"pooling", pooling == Pooling::Cls ? "cls" : "mean"}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.vocab_size = j.at("vocab_size");
  c.max_positions = j.at("max_positions");
  c.d_model = j.at("d_model");
  c.heads = j.at("heads");
  c.ffn = j.at("ffn");
  c.layers = j.at("layers");
  c.num_labels = j.at("num_labels");
  c.init_std = j.value("init_std", 0.02);
  c.ln_eps = j.value("ln_eps", 1e-5);
  const std::string pooling = j.value("pooling", "cls");
  if (pooling != "cls" && pooling != "mean") throw ConfigError("unknown pooling: " + pooling);
  c.pooling = pooling == "cls" ? Pooling::Cls : Pooling::Mean;
  c.validate();
  return c;
}

struct TransformerEncoder::Cache {
  struct Layer {
    Matrix input, q, k, v, concat, z1, g;
    std::vector<Matrix> attn;
    NormCache ln1, ln2;
    Matrix h1;
  };
  NormCache emb;
  std::vector<Layer> layers;
};

TransformerEncoder::TransformerEncoder(EncoderConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  const auto d = static_cast<Eigen::Index>(config_.d_model);
  const auto f = static_cast<Eigen::Index>(config_.ffn);
  auto normal = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = config_.init_std * rng.normal();
    }
    return m;
  };
  auto ones = [](Eigen::Index c) { return Matrix::Ones(1, c); };
  auto zeros = [](Eigen::Index c) { return Matrix::Zero(1, c); };
  params_.push_back(normal(static_cast<Eigen::Index>(config_.vocab_size), d));
  params_.push_back(normal(static_cast<Eigen::Index>(config_.max_positions), d));
  params_.push_back(ones(d));
  params_.push_back(zeros(d));
  for (std::size_t l = 0; l < config_.layers; ++l) {
    for (int i = 0; i < 4; ++i) {
      params_.push_back(normal(d, d));
      params_.push_back(zeros(d));
    }
    params_.push_back(ones(d));
    params_.push_back(zeros(d));
    params_.push_back(normal(d, f));
    params_.push_back(zeros(f));
    params_.push_back(normal(f, d));
    params_.push_back(zeros(d));
    params_.push_back(ones(d));
    params_.push_back(zeros(d));
  }
  params_.push_back(normal(d, static_cast<Eigen::Index>(config_.num_labels)));
  params_.push_back(zeros(static_cast<Eigen::Index>(config_.num_labels)));
}

TransformerEncoder::TransformerEncoder(EncoderConfig config, Params params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const TransformerEncoder fresh(config_, std::uint64_t{0});
  if (fresh.params_.size() != params_.size()) {
    throw IntegrityError("weights do not match the encoder configuration");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (fresh.params_[i].rows() != params_[i].rows() || fresh.params_[i].cols() != params_[i].cols()) {
      throw IntegrityError("weight tensor " + std::to_string(i) + " has the wrong shape");
    }
  }
}

void TransformerEncoder::reset_head(std::size_t num_labels, std::uint64_t seed) {
  config_.num_labels = num_labels;
  Rng rng(seed);
  Matrix w(static_cast<Eigen::Index>(config_.d_model), static_cast<Eigen::Index>(num_labels));
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = config_.init_std * rng.normal();
  }
  params_[head_weight_index()] = w;
  params_[head_bias_index()] = Matrix::Zero(1, static_cast<Eigen::Index>(num_labels));
}

Params TransformerEncoder::zero_like() const {
  Params z;
  z.reserve(params_.size());
  for (const auto& p : params_) z.push_back(Matrix::Zero(p.rows(), p.cols()));
  return z;
}

std::vector<bool> TransformerEncoder::decay_mask() const {
  std::vector<bool> mask(params_.size(), false);
  mask[kTokEmb] = mask[kPosEmb] = true;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    for (auto s : {kWq, kWk, kWv, kWo, kW1, kW2}) mask[layer_index(l, s)] = true;
  }
  mask[head_weight_index()] = true;
  return mask;
}

std::size_t TransformerEncoder::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
  return n;
}

void TransformerEncoder::forward(std::span<const int> ids, Cache* cache, Matrix& out) const {
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (n == 0) throw PreconditionError("empty token sequence");
  if (ids.size() > config_.max_positions) throw PreconditionError("sequence longer than positions");
  const auto d = static_cast<Eigen::Index>(config_.d_model);
  Matrix e(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int id = ids[static_cast<std::size_t>(i)];
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw PreconditionError("token id out of range");
    }
    e.row(i) = params_[kTokEmb].row(id) + params_[kPosEmb].row(i);
  }
  Matrix h = layer_norm(e, params_[kEmbLnG], params_[kEmbLnB], config_.ln_eps,
                        cache ? &cache->emb : nullptr);
  const std::size_t heads = config_.heads;
  const auto dh = static_cast<Eigen::Index>(config_.d_model / heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (cache) cache->layers.resize(config_.layers);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    auto P = [&](LayerSlot s) -> const Matrix& { return params_[layer_index(l, s)]; };
    Matrix q = h * P(kWq);
    add_bias(q, P(kBq));
    Matrix k = h * P(kWk);
    add_bias(k, P(kBk));
    Matrix v = h * P(kWv);
    add_bias(v, P(kBv));
    Matrix concat(n, d);
    std::vector<Matrix> attn;
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const auto c0 = static_cast<Eigen::Index>(hd) * dh;
      Matrix a = softmax_rows(q.middleCols(c0, dh) * k.middleCols(c0, dh).transpose() * scale);
      concat.middleCols(c0, dh) = a * v.middleCols(c0, dh);
      if (cache) attn.push_back(std::move(a));
    }
    Matrix att = concat * P(kWo);
    add_bias(att, P(kBo));
    Cache::Layer* lc = cache ? &cache->layers[l] : nullptr;
    Matrix h1 = layer_norm(h + att, P(kLn1G), P(kLn1B), config_.ln_eps, lc ? &lc->ln1 : nullptr);
    Matrix z1 = h1 * P(kW1);
    add_bias(z1, P(kB1));
    Matrix g = z1.unaryExpr([](double x) { return gelu(x); });
    Matrix f = g * P(kW2);
    add_bias(f, P(kB2));
    Matrix h2 = layer_norm(h1 + f, P(kLn2G), P(kLn2B), config_.ln_eps, lc ? &lc->ln2 : nullptr);
    if (lc) {
      lc->input = std::move(h);
      lc->q = std::move(q);
      lc->k = std::move(k);
      lc->v = std::move(v);
      lc->concat = std::move(concat);
      lc->attn = std::move(attn);
      lc->h1 = std::move(h1);
      lc->z1 = std::move(z1);
      lc->g = std::move(g);
    }
    h = std::move(h2);
  }
  out = std::move(h);
}

Matrix TransformerEncoder::hidden(std::span<const int> ids) const {
  Matrix out;
  forward(ids, nullptr, out);
  return out;
}

Eigen::RowVectorXd TransformerEncoder::pool(const Matrix& hidden) const {
  if (config_.pooling == Pooling::Cls) return hidden.row(0);
  return hidden.colwise().mean();
}

Eigen::VectorXd TransformerEncoder::logits(std::span<const int> ids) const {
  const Matrix h = hidden(ids);
  Eigen::RowVectorXd z = pool(h) * params_[head_weight_index()] + params_[head_bias_index()].row(0);
  return z.transpose();
}

double TransformerEncoder::accumulate_gradient(std::span<const int> ids, std::size_t label,
                                               Params& grads, double w) const {
  if (label >= config_.num_labels) throw PreconditionError("label index outside the head");
  Cache cache;
  Matrix h;
  forward(ids, &cache, h);
  const auto n = h.rows();
  const auto d = static_cast<Eigen::Index>(config_.d_model);
  const Matrix& wc = params_[head_weight_index()];
  const Eigen::RowVectorXd pooled = pool(h);
  Eigen::RowVectorXd z = pooled * wc + params_[head_bias_index()].row(0);
  const double mx = z.maxCoeff();
  Eigen::RowVectorXd p = (z.array() - mx).exp();
  const double sum = p.sum();
  p /= sum;
  const double loss = -(z(static_cast<Eigen::Index>(label)) - mx - std::log(sum));
  Eigen::RowVectorXd dz = p;
  dz(static_cast<Eigen::Index>(label)) -= 1.0;
  grads[head_weight_index()] += w * pooled.transpose() * dz;
  grads[head_bias_index()].row(0) += w * dz;

  // Upstream gradients are kept unscaled; `w` is applied at accumulation.
  Matrix dh = Matrix::Zero(n, d);
  const Eigen::RowVectorXd dpool = dz * wc.transpose();
  if (config_.pooling == Pooling::Cls) {
    dh.row(0) = dpool;
  } else {
    dh.rowwise() = dpool / static_cast<double>(n);
  }

  const std::size_t heads = config_.heads;
  const auto dhd = static_cast<Eigen::Index>(config_.d_model / heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dhd));
  for (std::size_t li = config_.layers; li-- > 0;) {
    const auto& lc = cache.layers[li];
    auto P = [&](LayerSlot s) -> const Matrix& { return params_[layer_index(li, s)]; };
    auto G = [&](LayerSlot s) -> Matrix& { return grads[layer_index(li, s)]; };

    const Matrix dx2 = layer_norm_backward(dh, P(kLn2G), lc.ln2, G(kLn2G), G(kLn2B), w);
    G(kW2) += w * lc.g.transpose() * dx2;
    G(kB2).row(0) += w * dx2.colwise().sum();
    Matrix dz1 = dx2 * P(kW2).transpose();
    dz1.array() *= lc.z1.unaryExpr([](double x) { return gelu_grad(x); }).array();
    G(kW1) += w * lc.h1.transpose() * dz1;
    G(kB1).row(0) += w * dz1.colwise().sum();
    const Matrix dh1 = dx2 + dz1 * P(kW1).transpose();

    const Matrix dx1 = layer_norm_backward(dh1, P(kLn1G), lc.ln1, G(kLn1G), G(kLn1B), w);
    G(kWo) += w * lc.concat.transpose() * dx1;
    G(kBo).row(0) += w * dx1.colwise().sum();
    const Matrix dconcat = dx1 * P(kWo).transpose();
    Matrix dq(n, d), dk(n, d), dv(n, d);
    for (std::size_t hd = 0; hd < heads; ++hd) {
      const auto c0 = static_cast<Eigen::Index>(hd) * dhd;
      const Matrix& a = lc.attn[hd];
      const auto dout = dconcat.middleCols(c0, dhd);
      dv.middleCols(c0, dhd) = a.transpose() * dout;
      const Matrix da = dout * lc.v.middleCols(c0, dhd).transpose();
      const Eigen::VectorXd rs = (da.array() * a.array()).rowwise().sum();
      const Matrix ds = a.array() * (da.colwise() - rs).array();
      dq.middleCols(c0, dhd) = ds * lc.k.middleCols(c0, dhd) * scale;
      dk.middleCols(c0, dhd) = ds.transpose() * lc.q.middleCols(c0, dhd) * scale;
    }
    G(kWq) += w * lc.input.transpose() * dq;
    G(kBq).row(0) += w * dq.colwise().sum();
    G(kWk) += w * lc.input.transpose() * dk;
    G(kBk).row(0) += w * dk.colwise().sum();
    G(kWv) += w * lc.input.transpose() * dv;
    G(kBv).row(0) += w * dv.colwise().sum();
    dh = dx1 + dq * P(kWq).transpose() + dk * P(kWk).transpose() + dv * P(kWv).transpose();
  }
  const Matrix de =
      layer_norm_backward(dh, params_[kEmbLnG], cache.emb, grads[kEmbLnG], grads[kEmbLnB], w);
  for (Eigen::Index i = 0; i < n; ++i) {
    grads[kTokEmb].row(ids[static_cast<std::size_t>(i)]) += w * de.row(i);
    grads[kPosEmb].row(i) += w * de.row(i);
  }
  return loss;
}

std::string TransformerEncoder::serialize() const {
  std::string out;
  auto put = [&](const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); };
  const std::uint32_t magic = kMagic;
  const std::uint64_t count = params_.size();
  put(&magic, sizeof magic);
  put(&count, sizeof count);
  for (const auto& m : params_) {
    const std::uint64_t r = static_cast<std::uint64_t>(m.rows());
    const std::uint64_t c = static_cast<std::uint64_t>(m.cols());
    put(&r, sizeof r);
    put(&c, sizeof c);
    put(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  return out;
}

Params TransformerEncoder::deserialize(const std::string& bytes) {
  std::size_t pos = 0;
  auto get = [&](void* p, std::size_t n) {
    if (pos + n > bytes.size()) throw IntegrityError("weights blob truncated");
    std::memcpy(p, bytes.data() + pos, n);
    pos += n;
  };
  std::uint32_t magic = 0;
  std::uint64_t count = 0;
  get(&magic, sizeof magic);
  if (magic != kMagic) throw IntegrityError("weights blob has an unknown header");
  get(&count, sizeof count);
  Params params;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t r = 0, c = 0;
    get(&r, sizeof r);
    get(&c, sizeof c);
    if (r * c > bytes.size()) throw IntegrityError("weights blob has an impossible shape");
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    get(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    params.push_back(std::move(m));
  }
  if (pos != bytes.size()) throw IntegrityError("weights blob has trailing bytes");
  return params;
}

AdamW::AdamW(AdamWConfig config, std::vector<bool> decay_mask)
    : config_(config), decay_(std::move(decay_mask)) {}

void AdamW::step(Params& params, const Params& grads, double lr) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Matrix::Zero(p.rows(), p.cols()));
      v_.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i < decay_.size() && decay_[i] && config_.weight_decay > 0) {
      params[i] *= 1.0 - lr * config_.weight_decay;
    }
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grads[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grads[i].cwiseProduct(grads[i]);
    params[i].array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + config_.eps);
  }
}

}  // namespace triage::nn
