#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace triage::features {

// (index, value) pairs sorted by index.
using SparseVector = std::vector<std::pair<int, double>>;

struct SparseFeaturizerConfig {
  std::size_t vocabulary_size = 20000;  // cap, most frequent terms kept
  std::size_t min_ngram = 1;
  std::size_t max_ngram = 1;
  bool idf_smoothing = true;
  bool sublinear_tf = false;
  bool lowercase = true;
  std::string stopwords = "none";  // see lexicon::stopwords
  std::size_t reduced_dimension = 300;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SparseFeaturizerConfig from_json(const nlohmann::json& j);
};

// Word (and word n-gram) terms of a text: lowercased, punctuation dropped,
// placeholders kept whole.
std::vector<std::string> terms(std::string_view text, const SparseFeaturizerConfig& config);

// tf * idf with idf = ln((1+n)/(1+df)) + 1 (smoothed) or ln(n/df) + 1, rows
// L2-normalized.
class TfidfVectorizer {
 public:
  struct State {
    std::vector<std::string> vocabulary;  // sorted; index = position
    std::vector<double> idf;
  };

  TfidfVectorizer() = default;
  explicit TfidfVectorizer(SparseFeaturizerConfig config) : config_(std::move(config)) {}

  void fit(const std::vector<std::string>& texts);
  SparseVector transform(std::string_view text) const;
  std::size_t vocabulary_size() const { return state_.vocabulary.size(); }
  const State& state() const { return state_; }
  State& state() { return state_; }
  const SparseFeaturizerConfig& config() const { return config_; }
  void set_config(SparseFeaturizerConfig c) { config_ = std::move(c); rebuild_index(); }
  void rebuild_index();

 private:
  SparseFeaturizerConfig config_;
  State state_;
  std::map<std::string, int, std::less<>> index_;
};

// Randomized truncated SVD (range finder with power iterations), components
// sign-normalized so the largest-magnitude loading of each is positive.
class TruncatedSvd {
 public:
  struct State {
    std::size_t rows = 0;  // components
    std::size_t cols = 0;  // input dimension
    std::vector<double> components;  // row-major rows x cols
    std::vector<double> singular_values;
  };

  void fit(const std::vector<SparseVector>& rows, std::size_t input_dim, std::size_t k,
           std::uint64_t seed);
  Eigen::VectorXd transform(const SparseVector& x) const;
  std::size_t dimension() const { return state_.rows; }
  const State& state() const { return state_; }
  State& state() { return state_; }
  const std::vector<double>& singular_values() const { return state_.singular_values; }

 private:
  State state_;
};

}  // namespace triage::features
