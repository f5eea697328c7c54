#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/anonymizer.hpp"
#include "triage/augmenter.hpp"
#include "triage/baselines.hpp"
#include "triage/classifier.hpp"
#include "triage/corpus.hpp"
#include "triage/errors.hpp"
#include "triage/evaluator.hpp"

namespace triage::pipe {

inline constexpr std::string_view kVersion = "0.1.0";

// A stage failed; earlier artifacts and the previous copy of this stage's
// directory are left untouched.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error("stage " + stage + " failed: " + message), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct GeneratorConfig {
  std::string kind = "stub";  // stub | http
  aug::HttpGeneratorClient::Options http;

  static GeneratorConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

std::unique_ptr<aug::GeneratorClient> make_generator(const GeneratorConfig& config);

struct PipelineConfig {
  std::filesystem::path run_dir = "runs/default";
  std::uint64_t seed = 13;

  std::filesystem::path train_file;
  std::optional<std::filesystem::path> test_file;  // absent: carved from train_file
  corpus::IngestOptions ingest;
  corpus::LabelPolicy labels;
  anon::AnonymizerConfig anonymizer;
  double validation_fraction = 0.2;
  double test_fraction = 0.2;

  bool augment = false;
  std::optional<std::filesystem::path> targets_file;
  std::optional<double> target_multiplier;
  std::size_t target_cap = 0;
  GeneratorConfig generator;
  aug::AugmentConfig augment_config;

  std::string model;  // registry name; required
  nlohmann::json spec_overrides = nlohmann::json::object();
  clf::TrainingConfig training;
  std::optional<clf::GridSpec> grid;

  std::vector<base::BaselineKind> baselines;
  base::BaselineConfig baseline_config;

  eval::Averaging averaging = eval::Averaging::Weighted;
  int decimals = 4;

  nlohmann::json source;  // the document as given

  // Validates structure and values before anything runs. Unknown keys,
  // missing required keys and out-of-range values raise ConfigError naming
  // the offending path.
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path);
  clf::ModelSpec model_spec() const;
};

struct StageRecord {
  std::string name;
  std::filesystem::path dir;
  std::string input_fingerprint;
  std::string output_fingerprint;
  bool skipped = false;
  double seconds = 0.0;
  nlohmann::json report;

  nlohmann::json to_json() const;
};

struct RunOptions {
  bool force = false;
  // Replaces the configured generator (tests).
  std::function<std::unique_ptr<aug::GeneratorClient>()> generator_factory;
};

struct RunResult {
  std::filesystem::path run_dir;
  std::vector<StageRecord> stages;
  nlohmann::json manifest;
};

RunResult run(const PipelineConfig& config, const RunOptions& options = {});

// Stage names in execution order.
const std::vector<std::string>& stage_names();

// SHA-256 over relative paths and contents, sorted; files named in `skip`
// are left out wherever they occur.
std::string hash_directory(const std::filesystem::path& dir, const std::set<std::string>& skip = {});

// Predicts every complaint and scores against its category (or raw label
// when uncategorized).
eval::EvaluationReport evaluate_model(const Classifier& model, const Complaints& test,
                                      eval::Averaging averaging, const std::string& name,
                                      const std::set<std::string>& excluded = {});

nlohmann::json version_info();

}  // namespace triage::pipe
