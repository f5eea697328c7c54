#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/labels.hpp"

namespace triage {

struct PredictionResult {
  CategoryLabel label = CategoryLabel::OtherCyberCrime;
  std::vector<CategoryLabel> label_order;
  std::vector<double> scores;  // parallel to label_order, sums to 1
  std::string model_fingerprint;
  // Set when the model could not score the input and fell back to a default
  // (e.g. a fully out-of-vocabulary text for the sparse baselines).
  bool fallback = false;

  double score(CategoryLabel c) const;
  nlohmann::json to_json() const;
  static PredictionResult from_json(const nlohmann::json& j);
};

// argmax with ties broken towards the lowest label_order index.
PredictionResult make_prediction(std::vector<CategoryLabel> label_order, std::vector<double> probs,
                                 std::string fingerprint);

// Numerically stable softmax.
std::vector<double> softmax(const std::vector<double>& logits);

// Uniform predict surface shared by fine-tuned and classical models.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual PredictionResult predict(std::string_view text) const = 0;
  virtual std::string fingerprint() const = 0;
  virtual std::vector<CategoryLabel> label_order() const = 0;
  virtual std::string kind() const = 0;
};

}  // namespace triage
