#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "triage/anonymizer.hpp"
#include "triage/complaint.hpp"
#include "triage/corpus.hpp"
#include "triage/labels.hpp"

namespace triage::clf {
class TransformerClassifier;
}

namespace triage::aug {

inline constexpr std::string_view kDefaultGeneratorModel = "llama-3.1-7b";

// ---------------------------------------------------------------- generation

class GeneratorClient {
 public:
  virtual ~GeneratorClient() = default;
  // n raw completions, fewer if the backend truncates. Throws
  // GeneratorUnavailable once retries are exhausted.
  virtual std::vector<std::string> generate(const std::string& prompt, std::size_t n) = 0;
  virtual std::string model_id() const = 0;
  virtual std::size_t max_parallelism() const { return 1; }
};

struct RetryPolicy {
  std::size_t attempts = 3;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds backoff{500};  // doubled after each failure
};

// POSTs {model_id, prompt, n, seed?, max_tokens} to base_url + path and
// expects {"completions": [string...]}.
class HttpGeneratorClient final : public GeneratorClient {
 public:
  struct Options {
    std::string base_url = "http://127.0.0.1:8081";
    std::string path = "/v1/generate";
    std::string model_id = std::string(kDefaultGeneratorModel);
    std::optional<std::uint64_t> seed;
    std::size_t max_tokens = 256;
    std::size_t parallelism = 4;
    RetryPolicy retry;
  };

  explicit HttpGeneratorClient(Options options);
  std::vector<std::string> generate(const std::string& prompt, std::size_t n) override;
  std::string model_id() const override { return options_.model_id; }
  std::size_t max_parallelism() const override { return options_.parallelism; }

 private:
  Options options_;
};

// Offline stand-in: echoes the complaint found after the last "Complaint:"
// marker with adjacent words swapped, a different swap on every call.
class StubGenerator final : public GeneratorClient {
 public:
  explicit StubGenerator(std::size_t parallelism = 1) : parallelism_(parallelism) {}
  std::vector<std::string> generate(const std::string& prompt, std::size_t n) override;
  std::string model_id() const override { return "stub-paraphraser"; }
  std::size_t max_parallelism() const override { return parallelism_; }

  static std::string variant(const std::vector<std::string>& words, std::size_t index);

 private:
  std::size_t parallelism_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::size_t> calls_;
};

inline constexpr std::string_view kDefaultPromptTemplate =
    "Paraphrase the following complaint {n} times. Preserve its meaning, keep placeholder "
    "tokens such as <PERSON> or <PHONE> verbatim, and keep the same Hindi/English language "
    "mix. Return a numbered list with one paraphrase per item.\n"
    "Category: {category}\n"
    "Complaint: {text}";

// Fills {n}, {text} and {category}. Throws ConfigError on a malformed template.
std::string render_prompt(std::string_view tmpl, const Complaint& complaint, std::size_t n);

struct GenerationOutcome {
  std::vector<std::string> completions;
  bool failed = false;
  std::string error;
};

// Never throws on backend failure: the failure is logged and reported.
GenerationOutcome generate_candidates(const Complaint& complaint, std::size_t n,
                                      GeneratorClient& client,
                                      std::string_view prompt_template = kDefaultPromptTemplate);

// ------------------------------------------------------------------ cleanup

// Splits one completion into candidate sentences: list markers stripped,
// whitespace collapsed, blank lines and enumeration markers start new
// items, lines ending in ':' dropped as preamble, fragments with fewer
// than min_tokens alphanumeric words dropped.
std::vector<std::string> cleanup(std::string_view raw, std::size_t min_tokens = 1);

// ---------------------------------------------------------------- encoders

class TokenEncoder {
 public:
  virtual ~TokenEncoder() = default;
  // One row per token. Throws EncoderError.
  virtual Eigen::MatrixXd embed_tokens(std::string_view text) const = 0;
  virtual Eigen::RowVectorXd embed_sentence(std::string_view text) const;
  virtual std::string id() const = 0;
};

// Context-free token vectors from hashed character trigrams plus the whole
// word, L2-normalized.
class HashedNgramEncoder final : public TokenEncoder {
 public:
  explicit HashedNgramEncoder(std::size_t dim = 512) : dim_(dim) {}
  Eigen::MatrixXd embed_tokens(std::string_view text) const override;
  std::string id() const override { return "hashed-ngram"; }

 private:
  std::size_t dim_;
};

// Whitespace tokens looked up in a fixed table; unknown tokens throw.
class StubEncoder final : public TokenEncoder {
 public:
  explicit StubEncoder(std::map<std::string, Eigen::RowVectorXd> table) : table_(std::move(table)) {}
  Eigen::MatrixXd embed_tokens(std::string_view text) const override;
  std::string id() const override { return "stub"; }

 private:
  std::map<std::string, Eigen::RowVectorXd> table_;
};

// Contextual final-layer states of a trained checkpoint, [CLS]/[SEP] dropped.
class CheckpointEncoder final : public TokenEncoder {
 public:
  explicit CheckpointEncoder(const std::filesystem::path& dir);
  ~CheckpointEncoder() override;
  Eigen::MatrixXd embed_tokens(std::string_view text) const override;
  std::string id() const override { return id_; }

 private:
  std::unique_ptr<clf::TransformerClassifier> model_;
  std::string id_;
};

// "hashed-ngram" or "checkpoint:<dir>".
std::shared_ptr<TokenEncoder> make_encoder(std::string_view backend);

// --------------------------------------------------------------- similarity

enum class SimilarityMode { TokenGreedyF1, SentenceCosine };
std::string_view to_string(SimilarityMode m);
SimilarityMode parse_mode(std::string_view s);

struct GreedyScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Rows are token embeddings. Precision averages over candidate tokens the best
// cosine against the source; recall the reverse.
GreedyScore greedy_f1(const Eigen::MatrixXd& source, const Eigen::MatrixXd& candidate);

struct SimilarityGateConfig {
  double theta = 0.97;
  SimilarityMode mode = SimilarityMode::TokenGreedyF1;
  std::string embedding_backend = "hashed-ngram";

  void validate() const;
  static SimilarityGateConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// In [0,1]. Throws PreconditionError on blank input, EncoderError on encoder failure.
double similarity(std::string_view source, std::string_view candidate,
                  const SimilarityGateConfig& config, const TokenEncoder& encoder);

// --------------------------------------------------------------------- gate

enum class RejectionReason { BelowThreshold, EmptyAfterCleanup, DuplicateOfExisting };
std::string_view to_string(RejectionReason r);

struct AugmentationCandidate {
  std::string parent_id;
  std::string generated_text;
  double similarity = 0.0;
  bool accepted = false;
  std::optional<RejectionReason> rejection_reason;

  nlohmann::json to_json() const;
};

struct GateResult {
  std::vector<AugmentationCandidate> accepted;
  std::vector<AugmentationCandidate> rejected;
};

// accepted iff similarity >= theta and the normalized text is not in
// `existing`. Accepted texts are added to `existing` as they pass.
GateResult gate(std::vector<AugmentationCandidate> candidates, const SimilarityGateConfig& config,
                std::unordered_set<std::string>& existing);
GateResult gate(std::vector<AugmentationCandidate> candidates, const SimilarityGateConfig& config);

// ------------------------------------------------------------------ targets

using ClassCounts = std::map<CategoryLabel, std::size_t>;

ClassCounts count_classes(const Complaints& complaints);

struct TargetDistribution {
  ClassCounts targets;  // classes left out keep their base count

  std::size_t target_for(CategoryLabel c, std::size_t base) const;
  // Throws ConfigError if any target is below its base count.
  void validate(const ClassCounts& base) const;

  // Reads {"targets": {label: count}}; "base" is informational.
  static TargetDistribution from_json(const nlohmann::json& j);
  static TargetDistribution load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  // target = max(base, min(round(base * multiplier), cap)).
  static TargetDistribution from_multiplier(const ClassCounts& base, double multiplier,
                                            std::size_t cap);
};

// ------------------------------------------------------------------- corpus

struct AugmentConfig {
  SimilarityGateConfig gate;
  std::string prompt_template = std::string(kDefaultPromptTemplate);
  std::size_t candidates_per_call = 5;
  double budget_factor = 20.0;  // attempts per missing sample
  std::size_t min_tokens = 1;
  bool reanonymize = true;
  anon::AnonymizerConfig anonymizer;
  std::string id_prefix = "a-";

  static AugmentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct ClassReport {
  std::size_t base = 0;
  std::size_t target = 0;
  std::size_t attempted = 0;  // completions requested
  std::size_t candidates = 0;
  std::size_t accepted = 0;
  std::size_t generation_failures = 0;
  std::map<RejectionReason, std::size_t> rejected_by_reason;
  std::optional<std::string> warning;

  std::size_t final_count() const { return base + accepted; }
};

struct AugmentationReport {
  std::map<CategoryLabel, ClassReport> classes;
  std::string model_id;
  std::string encoder_id;
  std::string prompt_template;
  SimilarityGateConfig gate;

  // {label: {base, target, final, attempted, candidates, accepted,
  //          rejected_by_reason, generation_failures, warning?}}
  nlohmann::json to_json() const;
  nlohmann::json run_metadata() const;
};

struct AugmentResult {
  Complaints additions;
  AugmentationReport report;
};

// Grows the training partition toward `targets`. validation and test are
// read only for duplicate detection.
AugmentResult augment_corpus(const corpus::DatasetSplit& split, const TargetDistribution& targets,
                             GeneratorClient& client, const AugmentConfig& config,
                             const TokenEncoder& encoder);
AugmentResult augment_corpus(const corpus::DatasetSplit& split, const TargetDistribution& targets,
                             GeneratorClient& client, const AugmentConfig& config);

}  // namespace triage::aug
