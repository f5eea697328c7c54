#include "triage/prediction.hpp"

#include <algorithm>
#include <cmath>

#include "triage/errors.hpp"

namespace triage {

double PredictionResult::score(CategoryLabel c) const {
  for (std::size_t i = 0; i < label_order.size(); ++i) {
    if (label_order[i] == c) return scores[i];
  }
  return 0.0;
}

nlohmann::json PredictionResult::to_json() const {
  nlohmann::json s = nlohmann::json::array();
  for (std::size_t i = 0; i < label_order.size(); ++i) {
    s.push_back({{"label", to_string(label_order[i])}, {"score", scores[i]}});
  }
  nlohmann::json j = {{"label", to_string(label)},
                      {"scores", s},
                      {"model_fingerprint", model_fingerprint}};
  if (fallback) j["fallback"] = true;
  return j;
}

PredictionResult PredictionResult::from_json(const nlohmann::json& j) {
  PredictionResult p;
  p.label = require_category(j.at("label").get<std::string>());
  for (const auto& s : j.at("scores")) {
    p.label_order.push_back(require_category(s.at("label").get<std::string>()));
    p.scores.push_back(s.at("score").get<double>());
  }
  p.model_fingerprint = j.value("model_fingerprint", std::string());
  p.fallback = j.value("fallback", false);
  return p;
}

PredictionResult make_prediction(std::vector<CategoryLabel> label_order, std::vector<double> probs,
                                 std::string fingerprint) {
  if (label_order.empty() || label_order.size() != probs.size()) {
    throw PreconditionError("prediction needs one score per label");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  PredictionResult p;
  p.label = label_order[best];
  p.label_order = std::move(label_order);
  p.scores = std::move(probs);
  p.model_fingerprint = std::move(fingerprint);
  return p;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

}  // namespace triage
