#include "triage/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/Sparse>

#include "triage/anonymizer.hpp"
#include "triage/errors.hpp"
#include "triage/lexicon.hpp"
#include "triage/rng.hpp"
#include "triage/tokenizer.hpp"

namespace triage::features {
using nlohmann::json;

void SparseFeaturizerConfig::validate() const {
  if (vocabulary_size == 0) throw ConfigError("vocabulary_size must be positive");
  if (min_ngram == 0 || max_ngram < min_ngram) throw ConfigError("bad ngram_range");
  if (reduced_dimension == 0) throw ConfigError("reduced_dimension must be positive");
  (void)lexicon::stopwords(stopwords);
}

json SparseFeaturizerConfig::to_json() const {
  return {{"vocabulary_size", vocabulary_size},
          {"ngram_range", {min_ngram, max_ngram}},
          {"idf_smoothing", idf_smoothing},
          {"sublinear_tf", sublinear_tf},
          {"lowercase", lowercase},
          {"stopwords", stopwords},
          {"reduced_dimension", reduced_dimension},
          {"seed", seed}};
}

SparseFeaturizerConfig SparseFeaturizerConfig::from_json(const json& j) {
  SparseFeaturizerConfig c;
  c.vocabulary_size = j.value("vocabulary_size", c.vocabulary_size);
  if (j.contains("ngram_range")) {
    const auto r = j.at("ngram_range").get<std::vector<std::size_t>>();
    if (r.size() != 2) throw ConfigError("ngram_range must have two entries");
    c.min_ngram = r[0];
    c.max_ngram = r[1];
  }
  c.idf_smoothing = j.value("idf_smoothing", c.idf_smoothing);
  c.sublinear_tf = j.value("sublinear_tf", c.sublinear_tf);
  c.lowercase = j.value("lowercase", c.lowercase);
  c.stopwords = j.value("stopwords", c.stopwords);
  c.reduced_dimension = j.value("reduced_dimension", c.reduced_dimension);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::vector<std::string> terms(std::string_view text, const SparseFeaturizerConfig& config) {
  tok::TokenizerOptions opts;
  opts.lowercase = config.lowercase;
  const auto& stop = lexicon::stopwords(config.stopwords);
  std::vector<std::string> words;
  for (auto& w : tok::pre_tokenize(text, opts)) {
    if (w.size() == 1 && std::ispunct(static_cast<unsigned char>(w[0]))) continue;
    if (stop.contains(w)) continue;
    words.push_back(std::move(w));
  }
  if (config.min_ngram == 1 && config.max_ngram == 1) return words;
  std::vector<std::string> out;
  for (std::size_t n = config.min_ngram; n <= config.max_ngram; ++n) {
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
      std::string g = words[i];
      for (std::size_t k = 1; k < n; ++k) g += " " + words[i + k];
      out.push_back(std::move(g));
    }
  }
  return out;
}

void TfidfVectorizer::fit(const std::vector<std::string>& texts) {
  config_.validate();
  if (texts.empty()) throw PreconditionError("cannot fit TF-IDF on an empty corpus");
  std::map<std::string, std::pair<std::size_t, std::size_t>> stats;  // term -> (total, df)
  for (const auto& t : texts) {
    auto ts = terms(t, config_);
    for (const auto& term : ts) ++stats[term].first;
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    for (const auto& term : ts) ++stats[term].second;
  }
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> ranked(stats.begin(),
                                                                                   stats.end());
  if (ranked.size() > config_.vocabulary_size) {
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second.first > b.second.first; });
    ranked.resize(config_.vocabulary_size);
    std::sort(ranked.begin(), ranked.end());
  }
  const double n = static_cast<double>(texts.size());
  state_ = {};
  for (const auto& [term, s] : ranked) {
    const double df = static_cast<double>(s.second);
    state_.vocabulary.push_back(term);
    state_.idf.push_back(config_.idf_smoothing ? std::log((1 + n) / (1 + df)) + 1
                                               : std::log(n / df) + 1);
  }
  rebuild_index();
}

void TfidfVectorizer::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < state_.vocabulary.size(); ++i) {
    index_.emplace(state_.vocabulary[i], static_cast<int>(i));
  }
}

SparseVector TfidfVectorizer::transform(std::string_view text) const {
  std::map<int, double> counts;
  for (const auto& t : terms(text, config_)) {
    if (const auto it = index_.find(t); it != index_.end()) counts[it->second] += 1;
  }
  SparseVector v;
  double norm = 0;
  for (const auto& [i, c] : counts) {
    const double tf = config_.sublinear_tf ? 1 + std::log(c) : c;
    const double x = tf * state_.idf[static_cast<std::size_t>(i)];
    v.emplace_back(i, x);
    norm += x * x;
  }
  if (norm > 0) {
    norm = std::sqrt(norm);
    for (auto& [i, x] : v) x /= norm;
  }
  return v;
}

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), std::min(m.rows(), m.cols()));
}

}  // namespace

void TruncatedSvd::fit(const std::vector<SparseVector>& rows, std::size_t input_dim, std::size_t k,
                       std::uint64_t seed) {
  if (rows.empty()) throw PreconditionError("cannot fit SVD on zero rows");
  if (k >= input_dim) {
    throw ConfigError("reduced_dimension " + std::to_string(k) +
                      " must be smaller than the realized vocabulary (" +
                      std::to_string(input_dim) + " terms)");
  }
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(input_dim);
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index r = 0; r < n; ++r) {
    for (const auto& [c, x] : rows[static_cast<std::size_t>(r)]) trip.emplace_back(r, c, x);
  }
  Sparse x(n, d);
  x.setFromTriplets(trip.begin(), trip.end());
  const Sparse xt = x.transpose();

  const auto l = static_cast<Eigen::Index>(std::min<std::size_t>(k + 10, input_dim));
  const std::size_t iters = 10 * k < std::min(rows.size(), input_dim) ? 7 : 4;
  Rng rng(seed);
  Eigen::MatrixXd omega(d, l);
  for (Eigen::Index j = 0; j < l; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) omega(i, j) = rng.normal();
  }
  Eigen::MatrixXd q = orthonormal_basis(x * omega);
  for (std::size_t it = 0; it < iters; ++it) {
    q = orthonormal_basis(x * orthonormal_basis(xt * q));
  }
  // B = Q^T X, factored through a thin QR of B^T.
  const Eigen::MatrixXd bt = xt * q;  // d x l'
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(bt);
  const auto lp = std::min(bt.rows(), bt.cols());
  const Eigen::MatrixXd qb = qr.householderQ() * Eigen::MatrixXd::Identity(bt.rows(), lp);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(lp).triangularView<Eigen::Upper>();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd comps = (qb * svd.matrixU()).transpose();  // rows: right singular vectors of B
  const auto kk = static_cast<Eigen::Index>(std::min<std::size_t>(k, static_cast<std::size_t>(comps.rows())));

  state_ = {};
  state_.rows = k;
  state_.cols = input_dim;
  state_.components.assign(k * input_dim, 0.0);
  state_.singular_values.assign(k, 0.0);
  for (Eigen::Index i = 0; i < kk; ++i) {
    Eigen::Index arg = 0;
    comps.row(i).cwiseAbs().maxCoeff(&arg);
    const double sign = comps(i, arg) < 0 ? -1.0 : 1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      state_.components[static_cast<std::size_t>(i) * input_dim + static_cast<std::size_t>(j)] =
          sign * comps(i, j);
    }
    state_.singular_values[static_cast<std::size_t>(i)] = svd.singularValues()(i);
  }
}

Eigen::VectorXd TruncatedSvd::transform(const SparseVector& x) const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_.rows));
  for (std::size_t r = 0; r < state_.rows; ++r) {
    double s = 0;
    const double* row = state_.components.data() + r * state_.cols;
    for (const auto& [c, v] : x) s += row[c] * v;
    z(static_cast<Eigen::Index>(r)) = s;
  }
  return z;
}

}  // namespace triage::features
