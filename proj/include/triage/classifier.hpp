#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/corpus.hpp"
#include "triage/encoder.hpp"
#include "triage/prediction.hpp"
#include "triage/tokenizer.hpp"

namespace triage::clf {

struct ModelSpec {
  std::string model_id;    // registry name
  std::string encoder_id;  // artifact identifier recorded with checkpoints
  std::size_t max_sequence_length = 128;
  std::size_t num_labels = kNumCategories;
  tok::TokenizerOptions tokenizer;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t ffn = 128;
  std::size_t layers = 2;
  nn::Pooling pooling = nn::Pooling::Cls;
  // Checkpoint whose encoder and vocabulary seed the model; empty trains the
  // compact encoder from random initialization.
  std::string pretrained_dir;

  bool pretrained() const { return !pretrained_dir.empty(); }
  void validate() const;
  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

// bert, roberta, hingbert, hingroberta.
const std::vector<ModelSpec>& registry();
ModelSpec registry_spec(std::string_view name);

enum class StopMetric { ValidationAccuracy, ValidationF1 };
enum class LrSchedule { Constant, LinearWarmupDecay };

struct TrainingConfig {
  double learning_rate = 2e-5;
  std::size_t batch_size = 16;
  double weight_decay = 0.01;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  StopMetric metric = StopMetric::ValidationF1;
  LrSchedule schedule = LrSchedule::Constant;
  double warmup_ratio = 0.1;
  std::uint64_t seed = 13;
  std::size_t vocab_max_size = 8000;

  // Fine-tuning a pretrained encoder requires a rate in [1e-5, 3e-5]; a
  // compact encoder trained from random initialization accepts [1e-5, 1e-2].
  void validate(bool pretrained) const;
  nlohmann::json to_json() const;
  static TrainingConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0;
  double metric = 0;
  double validation_accuracy = 0;
  double validation_macro_f1 = 0;
  double seconds = 0;
};

struct TrainingHistory {
  double initial_train_loss = 0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_metric = 0;
  bool stopped_early = false;

  nlohmann::json to_json() const;
  static TrainingHistory from_json(const nlohmann::json& j);
};

struct StopOutcome {
  std::size_t best_epoch = 0;  // 1-based, 0 when nothing was run
  double best_metric = 0;
  std::size_t epochs_run = 0;
  bool stopped_early = false;
};

// Epoch driver shared by training and its tests. `run_epoch(e)` returns the
// validation metric; `on_improve(e)` fires on strict improvement. Stops after
// `patience` consecutive epochs without improvement or at `max_epochs`.
StopOutcome run_epochs(std::size_t max_epochs, std::size_t patience,
                       const std::function<double(std::size_t)>& run_epoch,
                       const std::function<void(std::size_t)>& on_improve);

class TransformerClassifier final : public Classifier {
 public:
  TransformerClassifier(ModelSpec spec, TrainingConfig config, tok::WordPieceTokenizer tokenizer,
                        nn::TransformerEncoder encoder, std::vector<CategoryLabel> label_order,
                        std::string training_fingerprint, TrainingHistory history = {});

  PredictionResult predict(std::string_view text) const override;
  std::vector<PredictionResult> predict_batch(const std::vector<std::string>& texts) const;
  Eigen::VectorXd logits(std::string_view text) const;
  // Final-layer token states, used as contextual token embeddings.
  nn::Matrix token_states(std::string_view text) const;

  std::string fingerprint() const override { return fingerprint_; }
  std::vector<CategoryLabel> label_order() const override { return label_order_; }
  std::string kind() const override { return "transformer"; }

  const ModelSpec& spec() const { return spec_; }
  const TrainingConfig& config() const { return config_; }
  const TrainingHistory& history() const { return history_; }
  const std::string& training_fingerprint() const { return training_fingerprint_; }
  const tok::WordPieceTokenizer& tokenizer() const { return tokenizer_; }
  const nn::TransformerEncoder& encoder() const { return encoder_; }

  // Directory with weights.bin, metadata.json, history.json, vocab.txt.
  void save(const std::filesystem::path& dir) const;
  // Missing files raise MissingArtifactError; weights or metadata that do not
  // match the recorded fingerprint raise IntegrityError.
  static std::unique_ptr<TransformerClassifier> load(const std::filesystem::path& dir);

 private:
  std::vector<int> ids(std::string_view text) const;

  ModelSpec spec_;
  TrainingConfig config_;
  tok::WordPieceTokenizer tokenizer_;
  nn::TransformerEncoder encoder_;
  std::vector<CategoryLabel> label_order_;
  std::string training_fingerprint_;
  TrainingHistory history_;
  std::string weights_sha_;
  std::string fingerprint_;
};

using OptimizerFactory = std::function<std::unique_ptr<nn::Optimizer>(
    const TrainingConfig&, const nn::TransformerEncoder&)>;

struct TrainOptions {
  std::vector<CategoryLabel> label_order{all_categories().begin(), all_categories().end()};
  OptimizerFactory optimizer;  // empty: AdamW
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  std::unique_ptr<TransformerClassifier> model;
  TrainingHistory history;
};

TrainResult train(const corpus::DatasetSplit& split, const ModelSpec& spec,
                  const TrainingConfig& config, const TrainOptions& options = {});

struct GridSpec {
  std::vector<double> learning_rates{1e-5, 2e-5, 3e-5};
  std::vector<std::size_t> batch_sizes{8, 16, 32};
  std::vector<std::size_t> max_sequence_lengths;  // empty: the spec's length
  TrainingConfig base;
  std::size_t workers = 1;

  nlohmann::json to_json() const;
  static GridSpec from_json(const nlohmann::json& j);
};

struct GridPoint {
  double learning_rate = 0;
  std::size_t batch_size = 0;
  std::size_t max_sequence_length = 0;
};

struct GridResult {
  GridPoint point;
  bool failed = false;
  std::string error;
  double metric = 0;
  TrainingHistory history;
};

struct GridSearchResult {
  std::vector<GridResult> results;
  std::size_t best_index = 0;
  TrainingConfig best_config;
  ModelSpec best_spec;
  std::unique_ptr<TransformerClassifier> best_model;

  nlohmann::json to_json() const;
};

std::vector<GridPoint> grid_points(const GridSpec& grid, const ModelSpec& spec);

// One training run per grid point; best by validation metric, ties to the
// smaller learning rate, then the smaller batch, then the shorter length.
// Failed points are recorded; Error is thrown only when every point fails.
GridSearchResult grid_search(const corpus::DatasetSplit& split, const ModelSpec& spec,
                             const GridSpec& grid, const TrainOptions& options = {});

std::string_view to_string(StopMetric m);
StopMetric parse_stop_metric(std::string_view s);

}  // namespace triage::clf
