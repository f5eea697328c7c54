#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/complaint.hpp"
#include "triage/features.hpp"
#include "triage/learners.hpp"
#include "triage/prediction.hpp"

namespace triage::base {

enum class BaselineKind { GradientBoostedTrees, RandomForest, AdaptiveBoosting, KNearestNeighbors };

// Accepts xgboost|gbt, rf|random_forest, ada|adaboost, knn.
BaselineKind parse_kind(std::string_view s);
std::string_view to_string(BaselineKind k);     // gradient_boosted_trees, ...
std::string_view short_name(BaselineKind k);    // xgboost, rf, ada, knn
std::string_view display_name(BaselineKind k);  // XGBoost, Random Forest, AdaBoost, k-NN
const std::vector<BaselineKind>& all_kinds();

struct BaselineConfig {
  features::SparseFeaturizerConfig features;
  learn::GbtParams gbt;
  learn::ForestParams forest;
  learn::AdaParams ada;
  std::size_t knn_k = 5;

  nlohmann::json to_json() const;
  static BaselineConfig from_json(const nlohmann::json& j);
};

using Learner = std::variant<learn::GradientBoostedTrees, learn::RandomForest, learn::AdaBoost,
                             learn::KNearestNeighbors>;

class BaselineModel final : public Classifier {
 public:
  struct State {
    BaselineKind kind = BaselineKind::GradientBoostedTrees;
    BaselineConfig config;
    features::TfidfVectorizer vectorizer;
    features::TruncatedSvd reducer;
    Learner learner;
    std::vector<CategoryLabel> classes;  // learner class index -> label
    std::vector<double> prior;           // training class frequencies, parallel to classes
    std::vector<std::string> training_ids;  // sorted
  };

  explicit BaselineModel(State state);

  PredictionResult predict(std::string_view text) const override;
  std::string fingerprint() const override { return fingerprint_; }
  std::vector<CategoryLabel> label_order() const override;
  std::string kind() const override { return std::string(to_string(state_.kind)); }

  BaselineKind baseline_kind() const { return state_.kind; }
  const State& state() const { return state_; }
  std::string training_ids_hash() const;

  // Throws PreconditionError when any id was part of the training data.
  void check_disjoint(const Complaints& complaints) const;

  // Directory with model.bin (binary archive) and metadata.json.
  void save(const std::filesystem::path& dir) const;
  static std::unique_ptr<BaselineModel> load(const std::filesystem::path& dir);

  std::string serialize() const;

 private:
  State state_;
  std::string fingerprint_;
};

// Featurizer fit on `train` only, reducer on its features, learner on the
// reduced features.
std::unique_ptr<BaselineModel> fit(const Complaints& train, BaselineKind kind,
                                   const BaselineConfig& config = {});

}  // namespace triage::base
