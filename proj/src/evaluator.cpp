#include "triage/evaluator.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <numeric>

#include "triage/errors.hpp"

namespace triage::eval {

std::string_view to_string(Averaging a) { return a == Averaging::Macro ? "macro" : "weighted"; }

Averaging parse_averaging(std::string_view s) {
  if (s == "macro") return Averaging::Macro;
  if (s == "weighted") return Averaging::Weighted;
  throw ConfigError("averaging must be macro or weighted, got \"" + std::string(s) + "\"");
}

EvaluationReport evaluate(std::span<const LabeledPrediction> predictions, Averaging averaging,
                          std::string model_name) {
  if (predictions.empty()) throw PreconditionError("cannot evaluate an empty prediction set");
  EvaluationReport r;
  r.model_name = std::move(model_name);
  r.total = predictions.size();
  for (const auto& p : predictions) ++r.confusion[index_of(p.gold)][index_of(p.predicted)];

  std::size_t correct = 0;
  for (std::size_t k = 0; k < kNumCategories; ++k) correct += r.confusion[k][k];
  const double accuracy = static_cast<double>(correct) / static_cast<double>(r.total);

  for (std::size_t k = 0; k < kNumCategories; ++k) {
    std::size_t support = 0;
    std::size_t predicted = 0;
    for (std::size_t j = 0; j < kNumCategories; ++j) {
      support += r.confusion[k][j];
      predicted += r.confusion[j][k];
    }
    if (support == 0 && predicted == 0) continue;
    ClassMetrics m;
    m.support = support;
    m.predicted = predicted;
    const double tp = static_cast<double>(r.confusion[k][k]);
    if (predicted > 0) {
      m.precision = tp / static_cast<double>(predicted);
    } else {
      m.zero_division = true;
    }
    if (support > 0) {
      m.recall = tp / static_cast<double>(support);
    } else {
      m.zero_division = true;
    }
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    r.per_class[static_cast<CategoryLabel>(k)] = m;
  }

  r.macro.averaging = Averaging::Macro;
  r.weighted.averaging = Averaging::Weighted;
  r.macro.accuracy = r.weighted.accuracy = accuracy;
  double total_support = 0.0;
  for (const auto& [label, m] : r.per_class) {
    const double s = static_cast<double>(m.support);
    r.macro.precision += m.precision;
    r.macro.recall += m.recall;
    r.macro.f1 += m.f1;
    r.weighted.precision += s * m.precision;
    r.weighted.recall += s * m.recall;
    r.weighted.f1 += s * m.f1;
    total_support += s;
  }
  const double n_classes = static_cast<double>(r.per_class.size());
  r.macro.precision /= n_classes;
  r.macro.recall /= n_classes;
  r.macro.f1 /= n_classes;
  r.weighted.precision /= total_support;
  r.weighted.recall /= total_support;
  r.weighted.f1 /= total_support;
  r.aggregate = averaging == Averaging::Macro ? r.macro : r.weighted;
  return r;
}

EvaluationReport evaluate(std::span<const RawPrediction> predictions, Averaging averaging,
                          std::string model_name, const std::set<std::string>& excluded) {
  std::vector<LabeledPrediction> kept;
  std::set<std::string> seen_excluded;
  std::size_t excluded_count = 0;
  for (const auto& p : predictions) {
    if (excluded.contains(p.gold)) {
      ++excluded_count;
      seen_excluded.insert(p.gold);
      continue;
    }
    kept.push_back({require_category(p.gold), p.prediction.label});
  }
  auto report = evaluate(kept, averaging, std::move(model_name));
  report.excluded_classes = std::move(seen_excluded);
  report.excluded_count = excluded_count;
  return report;
}

namespace {

nlohmann::json aggregate_json(const Aggregate& a) {
  return {{"accuracy", a.accuracy},
          {"precision", a.precision},
          {"recall", a.recall},
          {"f1", a.f1},
          {"averaging", to_string(a.averaging)}};
}

Aggregate aggregate_from(const nlohmann::json& j) {
  Aggregate a;
  a.accuracy = j.at("accuracy");
  a.precision = j.at("precision");
  a.recall = j.at("recall");
  a.f1 = j.at("f1");
  a.averaging = parse_averaging(j.at("averaging").get<std::string>());
  return a;
}

}  // namespace

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [label, m] : per_class) {
    classes[std::string(triage::to_string(label))] = {
        {"precision", m.precision}, {"recall", m.recall},       {"f1", m.f1},
        {"support", m.support},     {"predicted", m.predicted}, {"zero_division", m.zero_division}};
  }
  nlohmann::json labels = nlohmann::json::array();
  for (auto c : all_categories()) labels.push_back(triage::to_string(c));
  return {{"schema_version", kReportSchemaVersion},
          {"model_name", model_name},
          {"total", total},
          {"aggregate", aggregate_json(aggregate)},
          {"macro", aggregate_json(macro)},
          {"weighted", aggregate_json(weighted)},
          {"per_class", classes},
          {"confusion_matrix", {{"labels", labels}, {"counts", confusion}}},
          {"excluded_classes", {{"classes", excluded_classes}, {"count", excluded_count}}}};
}

EvaluationReport EvaluationReport::from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != kReportSchemaVersion) {
    throw ConfigError("unsupported evaluation report schema version");
  }
  EvaluationReport r;
  r.model_name = j.at("model_name");
  r.total = j.value("total", std::size_t{0});
  r.aggregate = aggregate_from(j.at("aggregate"));
  if (j.contains("macro")) r.macro = aggregate_from(j.at("macro"));
  if (j.contains("weighted")) r.weighted = aggregate_from(j.at("weighted"));
  if (j.contains("per_class")) {
    for (const auto& [name, m] : j.at("per_class").items()) {
      ClassMetrics cm;
      cm.precision = m.at("precision");
      cm.recall = m.at("recall");
      cm.f1 = m.at("f1");
      cm.support = m.at("support");
      cm.predicted = m.value("predicted", std::size_t{0});
      cm.zero_division = m.value("zero_division", false);
      r.per_class[require_category(name)] = cm;
    }
  }
  if (j.contains("confusion_matrix")) {
    r.confusion = j.at("confusion_matrix").at("counts").get<ConfusionMatrix>();
  }
  if (j.contains("excluded_classes")) {
    r.excluded_classes = j.at("excluded_classes").at("classes").get<std::set<std::string>>();
    r.excluded_count = j.at("excluded_classes").at("count");
  }
  return r;
}

ComparisonTable compare(std::span<const EvaluationReport> reports) {
  std::set<std::string> names;
  ComparisonTable table;
  for (const auto& r : reports) {
    if (!names.insert(r.model_name).second) {
      throw ConfigError("duplicate model name in comparison: " + r.model_name);
    }
    table.rows.push_back({r.model_name, r.aggregate.accuracy, r.aggregate.precision,
                          r.aggregate.recall, r.aggregate.f1, {}});
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const auto& a, const auto& b) { return a.f1 > b.f1; });
  if (table.rows.empty()) return table;
  std::array<double, 4> best{};
  best.fill(-1.0);
  for (const auto& row : table.rows) {
    const std::array<double, 4> v = {row.accuracy, row.precision, row.recall, row.f1};
    for (std::size_t c = 0; c < 4; ++c) best[c] = std::max(best[c], v[c]);
  }
  for (auto& row : table.rows) {
    const std::array<double, 4> v = {row.accuracy, row.precision, row.recall, row.f1};
    for (std::size_t c = 0; c < 4; ++c) row.best[c] = v[c] == best[c];
  }
  return table;
}

std::string ComparisonTable::markdown(int decimals) const {
  std::string out = "| Model | Accuracy | Precision | Recall | F1-Score |\n";
  out += "|:---|---:|---:|---:|---:|\n";
  for (const auto& row : rows) {
    out += "| " + row.model;
    const std::array<double, 4> v = {row.accuracy, row.precision, row.recall, row.f1};
    for (std::size_t c = 0; c < 4; ++c) {
      const std::string num = fmt::format("{:.{}f}", v[c], decimals);
      out += row.best[c] ? " | **" + num + "**" : " | " + num;
    }
    out += " |\n";
  }
  return out;
}

std::string ComparisonTable::csv(int decimals) const {
  static constexpr std::array<std::string_view, 4> kCols = {"accuracy", "precision", "recall",
                                                            "f1"};
  std::string out = "model,accuracy,precision,recall,f1,best\n";
  for (const auto& row : rows) {
    std::string best;
    for (std::size_t c = 0; c < 4; ++c) {
      if (!row.best[c]) continue;
      if (!best.empty()) best += ';';
      best += kCols[c];
    }
    out += fmt::format("{},{:.{}f},{:.{}f},{:.{}f},{:.{}f},{}\n", row.model, row.accuracy,
                       decimals, row.precision, decimals, row.recall, decimals, row.f1, decimals,
                       best);
  }
  return out;
}

nlohmann::json ComparisonTable::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& row : rows) {
    arr.push_back({{"model", row.model},
                   {"accuracy", row.accuracy},
                   {"precision", row.precision},
                   {"recall", row.recall},
                   {"f1", row.f1},
                   {"best", {{"accuracy", row.best[0]},
                             {"precision", row.best[1]},
                             {"recall", row.best[2]},
                             {"f1", row.best[3]}}}});
  }
  return {{"schema_version", kReportSchemaVersion}, {"rows", arr}};
}

}  // namespace triage::eval
