#include <doctest.h>

#include <fstream>
#include <sstream>

#include "eval_oracle.hpp"
#include "triage/errors.hpp"
#include "triage/evaluator.hpp"
#include "triage/rng.hpp"

using namespace triage;
using namespace triage::eval;

namespace {

constexpr auto A = CategoryLabel::FinancialFraud;
constexpr auto B = CategoryLabel::Ransomware;

std::vector<LabeledPrediction> random_set(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<LabeledPrediction> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({static_cast<CategoryLabel>(rng.below(k)),
                   static_cast<CategoryLabel>(rng.below(k))});
  }
  return out;
}

EvaluationReport fixture_report(const std::string& name, double acc, double p, double r,
                                double f1) {
  EvaluationReport rep;
  rep.model_name = name;
  rep.aggregate = {acc, p, r, f1, Averaging::Weighted};
  return rep;
}

}  // namespace

TEST_CASE("perfect predictions") {
  std::vector<LabeledPrediction> p = {{A, A}, {B, B}, {A, A}};
  auto r = evaluate(p, Averaging::Macro);
  CHECK(r.aggregate.accuracy == 1.0);
  for (const auto& [label, m] : r.per_class) CHECK(m.f1 == 1.0);
}

TEST_CASE("two-class hand-computed case") {
  std::vector<LabeledPrediction> p = {{A, A}, {A, B}, {B, B}, {B, B}};
  auto r = evaluate(p, Averaging::Macro);
  CHECK(r.aggregate.accuracy == doctest::Approx(0.75));
  CHECK(r.per_class.at(A).precision == doctest::Approx(1.0));
  CHECK(r.per_class.at(A).recall == doctest::Approx(0.5));
  CHECK(r.per_class.at(A).f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.per_class.at(B).precision == doctest::Approx(2.0 / 3.0));
  CHECK(r.per_class.at(B).recall == doctest::Approx(1.0));
  CHECK(r.per_class.at(B).f1 == doctest::Approx(0.8));
}

TEST_CASE("zero predicted positives gives flagged zero precision") {
  std::vector<LabeledPrediction> p = {{A, B}, {B, B}};
  auto r = evaluate(p, Averaging::Weighted);
  CHECK(r.per_class.at(A).precision == 0.0);
  CHECK(r.per_class.at(A).zero_division);
  CHECK_FALSE(r.per_class.at(B).zero_division);
}

TEST_CASE("report invariants and oracle equivalence on random sets") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    auto preds = random_set(rng, 20, 3);
    auto r = evaluate(preds, Averaging::Weighted);
    auto o = oracle::recompute(preds);
    CHECK(r.weighted.accuracy == o.accuracy);
    CHECK(r.macro.precision == o.macro_p);
    CHECK(r.macro.recall == o.macro_r);
    CHECK(r.macro.f1 == o.macro_f1);
    CHECK(r.weighted.precision == o.weighted_p);
    CHECK(r.weighted.recall == o.weighted_r);
    CHECK(r.weighted.f1 == o.weighted_f1);
    std::size_t trace = 0;
    for (const auto& [label, m] : r.per_class) {
      std::size_t row = 0;
      for (auto v : r.confusion[index_of(label)]) row += v;
      CHECK(row == m.support);
      CHECK(m.f1 == o.f1[index_of(label)]);
      CHECK(m.precision >= 0.0);
      CHECK(m.precision <= 1.0);
      trace += r.confusion[index_of(label)][index_of(label)];
    }
    CHECK(r.aggregate.accuracy == static_cast<double>(trace) / 20.0);

    // Permutation invariance.
    auto shuffled = preds;
    rng.shuffle(shuffled);
    auto r2 = evaluate(shuffled, Averaging::Weighted);
    CHECK(r2.to_json() == r.to_json());
  }
}

TEST_CASE("raw evaluation excludes listed classes and rejects unknown ones") {
  auto pred = make_prediction({A, B}, {0.9, 0.1}, "fp");
  std::vector<RawPrediction> raw = {{"Financial Fraud", pred},
                                    {"Crime Against Women & Children", pred}};
  auto r = evaluate(raw, Averaging::Weighted, "m", {"Crime Against Women & Children"});
  CHECK(r.total == 1);
  CHECK(r.excluded_count == 1);
  CHECK(r.excluded_classes.contains("Crime Against Women & Children"));
  CHECK_THROWS_AS(evaluate(raw, Averaging::Weighted, "m", {}), UnknownLabelError);
  std::vector<RawPrediction> none;
  CHECK_THROWS_AS(evaluate(none, Averaging::Weighted, "m", {}), PreconditionError);
}

TEST_CASE("report JSON round-trips") {
  std::vector<LabeledPrediction> p = {{A, A}, {A, B}, {B, B}};
  auto r = evaluate(p, Averaging::Macro, "x");
  auto back = EvaluationReport::from_json(r.to_json());
  CHECK(back.to_json() == r.to_json());
}

TEST_CASE("compare sorts by F1 and rejects duplicate names") {
  std::vector<EvaluationReport> reps = {fixture_report("a", 0.7, 0.7, 0.7, 0.68),
                                        fixture_report("b", 0.7, 0.7, 0.7, 0.71)};
  auto t = compare(reps);
  CHECK(t.rows[0].model == "b");
  std::vector<EvaluationReport> one = {fixture_report("only", 0.5, 0.5, 0.5, 0.5)};
  CHECK(compare(one).rows.size() == 1);
  reps.push_back(fixture_report("a", 0.1, 0.1, 0.1, 0.1));
  CHECK_THROWS_AS(compare(reps), ConfigError);
}

TEST_CASE("baseline fixture renders byte-identically to the golden file") {
  std::ifstream fixture("tests/golden/table_vi_fixture.json");
  REQUIRE(fixture.good());
  const auto rows = nlohmann::json::parse(fixture);
  std::vector<EvaluationReport> reps;
  for (const auto& row : rows) {
    reps.push_back(fixture_report(row.at("model"), row.at("accuracy"), row.at("precision"),
                                  row.at("recall"), row.at("f1")));
  }
  std::ifstream golden("tests/golden/table_vi.md");
  std::stringstream expected;
  expected << golden.rdbuf();
  CHECK(compare(reps).markdown(2) == expected.str());
}
