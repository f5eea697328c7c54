#pragma once

#include <array>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/labels.hpp"
#include "triage/prediction.hpp"

namespace triage::eval {

enum class Averaging { Macro, Weighted };

std::string_view to_string(Averaging a);
Averaging parse_averaging(std::string_view s);

inline constexpr int kReportSchemaVersion = 1;

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  std::size_t predicted = 0;
  // Precision had no predicted positives (or recall no support) and was set to 0.
  bool zero_division = false;
};

struct Aggregate {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Averaging averaging = Averaging::Weighted;
};

using ConfusionMatrix = std::array<std::array<std::size_t, kNumCategories>, kNumCategories>;

struct EvaluationReport {
  std::string model_name;
  // Classes that occur as gold or predicted label.
  std::map<CategoryLabel, ClassMetrics> per_class;
  Aggregate aggregate;  // headline, in the requested averaging mode
  Aggregate macro;
  Aggregate weighted;
  ConfusionMatrix confusion{};  // [gold][predicted]
  std::size_t total = 0;
  std::set<std::string> excluded_classes;
  std::size_t excluded_count = 0;

  nlohmann::json to_json() const;
  static EvaluationReport from_json(const nlohmann::json& j);
};

struct LabeledPrediction {
  CategoryLabel gold;
  CategoryLabel predicted;
};

// Throws PreconditionError on empty input.
EvaluationReport evaluate(std::span<const LabeledPrediction> predictions, Averaging averaging,
                          std::string model_name = "");

struct RawPrediction {
  std::string gold;  // label string as found in the test file
  PredictionResult prediction;
};

// Gold labels listed in `excluded` are dropped and counted; any other gold
// label outside the category set raises UnknownLabelError.
EvaluationReport evaluate(std::span<const RawPrediction> predictions, Averaging averaging,
                          std::string model_name, const std::set<std::string>& excluded);

struct ComparisonTable {
  struct Row {
    std::string model;
    double accuracy, precision, recall, f1;
    std::array<bool, 4> best;  // accuracy, precision, recall, f1
  };
  std::vector<Row> rows;  // sorted by F1 descending, ties in input order

  std::string markdown(int decimals = 4) const;
  std::string csv(int decimals = 4) const;
  nlohmann::json to_json() const;
};

// Throws ConfigError on duplicate model names.
ComparisonTable compare(std::span<const EvaluationReport> reports);

}  // namespace triage::eval
