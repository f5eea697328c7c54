// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "../eval_oracle.hpp"
#include "triage/anonymizer.hpp"
#include "triage/augmenter.hpp"
#include "triage/baselines.hpp"
#include "triage/classifier.hpp"
#include "triage/corpus.hpp"
#include "triage/errors.hpp"
#include "triage/evaluator.hpp"
#include "triage/model_loader.hpp"
#include "triage/pipeline.hpp"
#include "triage/rng.hpp"
#include "triage/service.hpp"
#include "triage/synth.hpp"
#include "triage/text.hpp"

// after Eigen: resolv.h defines a _res macro
#include <httplib.h>

using namespace triage;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("triage_accept_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double accuracy(const Classifier& m, const Complaints& test) {
  std::size_t ok = 0;
  for (const auto& c : test) ok += m.predict(c.text).label == *c.category ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(test.size());
}

// ------------------------------------------------------------------ labels

Outcome label_standardization() {
  const std::vector<std::pair<std::string, std::string>> table = {
      {"Any Other Cyber Crime", "Other Cyber Crime"},
      {"Child Pornography CPChild Sexual Abuse Material CSAM", "Child Abuse Material"},
      {"Cryptocurrency Crime", "Cryptocurrency Crime"},
      {"Cyber Attack/ Dependent Crimes", "Cyber Attack/Dependent Crimes"},
      {"Cyber Terrorism", "Cyber Terrorism"},
      {"Hacking Damage to computer computer system etc", "Hacking/Damage"},
      {"Online Cyber Trafficking", "Cyber Trafficking"},
      {"Online Financial Fraud", "Financial Fraud"},
      {"Online Gambling Betting", "Gambling/Betting"},
      {"Online and Social Media Related Crime", "Social Media Crime"},
      {"Ransomware", "Ransomware"},
      {"RapeGang Rape RGRSexually Abusive Content", "Rape or Sexual Abuse Content"},
      {"Sexually Explicit Act", "Sexually Explicit Content"},
      {"Sexually Obscene material", "Sexually Obscene Content"},
  };
  Complaints in;
  for (std::size_t i = 0; i < table.size(); ++i) {
    Complaint c;
    c.id = fmt::format("l{}", i);
    c.text = fmt::format("complaint number {}", i);
    c.raw_category = table[i].first;
    in.push_back(c);
  }
  corpus::LabelPolicy policy;
  policy.min_samples_per_class = 1;
  const auto out = corpus::standardize_labels(in, policy, corpus::Partition::Train);
  std::size_t errors = 0;
  if (out.complaints.size() != table.size()) errors += table.size();
  for (std::size_t i = 0; i < out.complaints.size() && i < table.size(); ++i) {
    const auto& c = out.complaints[i];
    if (!c.category || std::string(to_string(*c.category)) != table[i].second) ++errors;
  }
  std::set<std::string> distinct;
  for (const auto& c : out.complaints) distinct.insert(std::string(to_string(*c.category)));

  bool raised = false;
  Complaint bad;
  bad.id = "x";
  bad.text = "some complaint";
  bad.raw_category = "Phishing Scam";
  try {
    corpus::standardize_labels({bad}, policy);
  } catch (const UnknownLabelError&) {
    raised = true;
  }
  return {errors == 0 && distinct.size() == 14 && raised,
          fmt::format("{} errors over 14 rows, {} distinct labels, unmapped raises: {}", errors, distinct.size(), raised)};
}

// -------------------------------------------------------------- anonymizer

Outcome anonymizer_coverage() {
  const auto samples = synth::pii_texts(1000, 20240611);
  anon::AnonymizerConfig patterns_only;
  patterns_only.recognizer = "none";
  anon::Redactor pattern_redactor(anon::make_recognizer_factory(patterns_only)());
  anon::Redactor full;

  std::size_t entities = 0, replaced = 0, exact_text = 0, idempotent = 0, residual = 0;
  for (const auto& s : samples) {
    // Expected output: every embedded entity swapped for its placeholder.
    std::string expected;
    std::size_t pos = 0;
    for (const auto& e : s.embedded) {
      expected += s.text.substr(pos, e.start - pos);
      expected += anon::placeholder(e.kind);
      pos = e.end;
    }
    expected += s.text.substr(pos);

    const auto r = pattern_redactor.redact(s.text);
    exact_text += r.text == expected ? 1 : 0;
    for (const auto& e : s.embedded) {
      ++entities;
      replaced += std::any_of(r.spans.begin(), r.spans.end(), [&](const anon::Span& sp) {
        return sp.start == e.start && sp.end == e.end && sp.kind == e.kind;
      }) ? 1 : 0;
    }
    const auto f = full.redact(s.text);
    idempotent += full.redact(f.text).text == f.text ? 1 : 0;
    residual += anon::find_pattern_entities(f.text).size();
  }
  const bool ok = replaced == entities && exact_text == samples.size() && idempotent == samples.size() && residual == 0;
  return {ok, fmt::format("{}/{} entities replaced, {}/1000 exact texts, {}/1000 idempotent, {} residual matches",
                          replaced, entities, exact_text, idempotent, residual)};
}

// ---------------------------------------------------------- privacy sweep

// Independent sweep patterns; digit runs glued to letters, digits or a
// decimal point (hashes, scores) are not phone numbers.
std::size_t sweep(const std::string& content) {
  static const std::regex email(R"([A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(\.[A-Za-z0-9-]+)+)");
  static const std::regex phone(R"((\+91[ -]?|0)?([6-9]\d{2}[ -]?\d{2}[ -]?\d{5}|\d{3}-\d{3}-\d{4}|\d{5}[ -]\d{5}))");
  static const std::regex url(
      R"((https?://|www\.)[^\s"]+|[A-Za-z0-9-]+\.(com|in|co\.in|net|org|xyz|online|site)(/[^\s"]*)?)",
      std::regex::icase);
  std::size_t hits = 0;
  for (const auto* re : {&email, &url}) {
    hits += static_cast<std::size_t>(std::distance(std::sregex_iterator(content.begin(), content.end(), *re),
                                                   std::sregex_iterator()));
  }
  for (auto it = std::sregex_iterator(content.begin(), content.end(), phone); it != std::sregex_iterator(); ++it) {
    const auto b = static_cast<std::size_t>(it->position());
    const auto e = b + static_cast<std::size_t>(it->length());
    const bool glued_before = b > 0 && (std::isalnum(static_cast<unsigned char>(content[b - 1])) || content[b - 1] == '.');
    const bool glued_after = e < content.size() && std::isalnum(static_cast<unsigned char>(content[e]));
    if (!glued_before && !glued_after) ++hits;
  }
  return hits;
}

Outcome privacy_sweep() {
  const fs::path root = scratch("privacy");
  synth::SmokeOptions o;
  o.per_class = 40;
  const auto split = synth::smoke_split(synth::separable_corpus(o), 0.2, 0.2, 3);
  base::BaselineConfig bcfg;
  bcfg.features.reduced_dimension = 16;
  base::fit(split.train, base::BaselineKind::KNearestNeighbors, bcfg)->save(root / "model");

  svc::ServiceConfig cfg;
  cfg.model_dir = root / "model";
  cfg.port = 0;
  cfg.privacy_mode = true;
  cfg.tokens = {svc::AuthToken::parse("secret")};
  cfg.storage_path = root / "submissions.jsonl";
  std::size_t accepted = 0, seeded = 0;
  {
    svc::Service service(cfg);
    service.load_model_async();
    if (!service.wait_until_loaded(std::chrono::seconds(60))) return {false, "model did not load"};
    httplib::Client client("127.0.0.1", service.start());
    const httplib::Headers auth = {{"Authorization", "Bearer secret"}};
    for (const auto& s : synth::pii_texts(100, 777)) {
      seeded += sweep(s.text) > 0 ? 1 : 0;
      const auto res = client.Post("/api/v1/classify", auth, json{{"text", s.text}}.dump(), "application/json");
      accepted += res && res->status == 200 ? 1 : 0;
    }
    service.stop();
  }
  const std::string content = slurp(cfg.storage_path);
  std::size_t lines = 0, raw_fields = 0;
  for (std::istringstream in(content); !in.eof();) {
    std::string line;
    std::getline(in, line);
    if (line.empty()) continue;
    ++lines;
    raw_fields += json::parse(line).contains("raw_text") ? 1 : 0;
  }
  const std::size_t hits = sweep(content);
  return {accepted == 100 && seeded == 100 && lines == 100 && hits == 0 && raw_fields == 0,
          fmt::format("{}/100 classified, {} stored records, {} sweep matches, {} raw_text fields (inputs with PII: {})",
                      accepted, lines, hits, raw_fields, seeded)};
}

// -------------------------------------------------------------- similarity

// Plain-loop greedy matching F1, clamped to [0, 1].
double oracle_greedy(const std::vector<std::vector<double>>& src, const std::vector<std::vector<double>>& cand) {
  auto cos = [](const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      d += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    return d / (std::sqrt(na) * std::sqrt(nb));
  };
  double p = 0, r = 0;
  for (const auto& c : cand) {
    double best = -2;
    for (const auto& s : src) best = std::max(best, cos(c, s));
    p += best;
  }
  for (const auto& s : src) {
    double best = -2;
    for (const auto& c : cand) best = std::max(best, cos(c, s));
    r += best;
  }
  p /= static_cast<double>(cand.size());
  r /= static_cast<double>(src.size());
  const double f = p + r == 0 ? 0 : 2 * p * r / (p + r);
  return std::clamp(f, 0.0, 1.0);
}

Outcome similarity_oracle() {
  aug::SimilarityGateConfig cfg;
  cfg.mode = aug::SimilarityMode::TokenGreedyF1;
  std::size_t cases = 0, matched = 0;
  double worst = 0;

  auto check = [&](const std::map<std::string, Eigen::RowVectorXd>& table, const std::string& a, const std::string& b,
                   double expected) {
    const aug::StubEncoder enc(table);
    const double got = aug::similarity(a, b, cfg, enc);
    ++cases;
    worst = std::max(worst, std::abs(got - expected));
    matched += std::abs(got - expected) <= 1e-9 ? 1 : 0;
  };
  auto v2 = [](double x, double y) { Eigen::RowVectorXd v(2); v << x, y; return v; };

  // Closed-form cases.
  const double s2 = 1.0 / std::sqrt(2.0);
  std::map<std::string, Eigen::RowVectorXd> t2 = {{"x", v2(1, 0)}, {"y", v2(0, 1)}, {"d", v2(1, 1)},
                                                  {"n", v2(-1, 0)}, {"h", v2(3, 4)}};
  check(t2, "x", "x", 1.0);
  check(t2, "x", "y", 0.0);
  check(t2, "x y", "x", 2.0 / 3.0);            // P = 1, R = 1/2
  check(t2, "x", "x y", 2.0 / 3.0);            // P = 1/2, R = 1
  check(t2, "x", "d", s2);                     // P = R = 1/sqrt2
  check(t2, "x y", "d", 2 * s2 * s2 / (2 * s2));  // P = R = 1/sqrt2
  check(t2, "x", "n", 0.0);                    // clamped at zero
  check(t2, "x", "h", 0.6);                    // cos = 3/5
  check(t2, "y", "h", 0.8);                    // cos = 4/5
  check(t2, "x y", "x y", 1.0);
  check(t2, "x y", "y x", 1.0);                // order-free
  check(t2, "x x y", "x y", 1.0);              // repetition does not matter for the max
  {
    // candidate {h, x}: P = mean(0.8, 1); source {x, y}: R = mean(1, 0.8)
    const double p = 0.9, r = 0.9;
    check(t2, "x y", "h x", 2 * p * r / (p + r));
  }
  check(t2, "d", "h", (1 * 3 + 1 * 4) / (std::sqrt(2.0) * 5));

  // Random 4-dimensional tables against the loop oracle.
  Rng rng(99);
  for (int k = 0; k < 16; ++k) {
    std::map<std::string, Eigen::RowVectorXd> t;
    std::map<std::string, std::vector<double>> raw;
    for (int w = 0; w < 6; ++w) {
      std::vector<double> v(4);
      for (auto& x : v) x = rng.uniform() * 2 - 0.6;
      Eigen::RowVectorXd e(4);
      for (int i = 0; i < 4; ++i) e(i) = v[static_cast<std::size_t>(i)];
      const std::string key = fmt::format("w{}", w);
      t[key] = e;
      raw[key] = v;
    }
    std::vector<std::string> a, b;
    for (std::size_t i = 0, n = 1 + rng.below(5); i < n; ++i) a.push_back(fmt::format("w{}", rng.below(6)));
    for (std::size_t i = 0, n = 1 + rng.below(5); i < n; ++i) b.push_back(fmt::format("w{}", rng.below(6)));
    std::vector<std::vector<double>> va, vb;
    for (const auto& w : a) va.push_back(raw[w]);
    for (const auto& w : b) vb.push_back(raw[w]);
    std::string sa, sb;
    for (const auto& w : a) sa += w + " ";
    for (const auto& w : b) sb += w + " ";
    check(t, sa, sb, oracle_greedy(va, vb));
  }

  // Self-similarity with the default encoder.
  const aug::HashedNgramEncoder hashed;
  Rng trng(5);
  const auto corpus = synth::separable_corpus({});
  std::size_t self_ok = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const auto& text = corpus[trng.below(corpus.size())].text;
    self_ok += std::abs(aug::similarity(text, text, cfg, hashed) - 1.0) <= 1e-6 ? 1 : 0;
  }

  // Gate monotonicity: accepted sets shrink (nested) as theta grows.
  std::vector<aug::AugmentationCandidate> cands;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto& src = corpus[trng.below(corpus.size())].text;
    const auto& other = corpus[trng.below(corpus.size())].text;
    auto words = text::split_whitespace(src);
    if (trng.below(2) && words.size() > 2) std::swap(words[0], words[1]);
    if (trng.below(3) == 0) words.push_back("extra" + std::to_string(i));
    const std::string candidate = trng.below(4) == 0 ? other + " v" + std::to_string(i) : text::join(words, " ") + " c" + std::to_string(i);
    aug::AugmentationCandidate c;
    c.parent_id = fmt::format("p{}", i);
    c.generated_text = candidate;
    c.similarity = aug::similarity(src, candidate, cfg, hashed);
    cands.push_back(c);
  }
  std::set<std::string> previous;
  bool nested = true, first = true;
  std::vector<std::size_t> counts;
  for (double theta = 0.0; theta <= 1.0 + 1e-12; theta += 0.01) {
    aug::SimilarityGateConfig g = cfg;
    g.theta = std::min(theta, 1.0);
    std::unordered_set<std::string> existing;
    const auto res = aug::gate(cands, g, existing);
    std::set<std::string> ids;
    for (const auto& c : res.accepted) ids.insert(c.parent_id);
    for (const auto& c : res.accepted) nested = nested && c.similarity >= g.theta;
    if (!first) nested = nested && std::includes(previous.begin(), previous.end(), ids.begin(), ids.end());
    counts.push_back(ids.size());
    previous = std::move(ids);
    first = false;
  }
  const bool spread = counts.front() > counts.back() && counts.front() == 1000;
  const bool ok = cases >= 20 && matched == cases && self_ok == 200 && nested && spread;
  return {ok, fmt::format("{}/{} stub cases within 1e-9 (worst {:.2e}), self {}/200, gate nested over 101 thresholds "
                          "({} -> {} accepted): {}",
                          matched, cases, worst, self_ok, counts.front(), counts.back(), nested)};
}

// ------------------------------------------------------------ augmentation

Outcome augmentation_distribution() {
  const auto targets = aug::TargetDistribution::load("data/augmentation_targets.json");
  const json doc = json::parse(slurp("data/augmentation_targets.json"));
  std::map<CategoryLabel, std::size_t> base;
  for (const auto& [k, v] : doc.at("base").items()) base[require_category(k)] = v.get<std::size_t>();

  corpus::DatasetSplit split;
  split.train = synth::sized_corpus(base, 1);
  std::map<CategoryLabel, std::size_t> held;
  for (const auto& [c, n] : base) held[c] = 3;
  auto relabel = [](Complaints cs, const std::string& prefix) {
    for (auto& c : cs) c.id = prefix + c.id;
    return cs;
  };
  split.validation = relabel(synth::sized_corpus(held, 2), "v");
  split.test = relabel(synth::sized_corpus(held, 3), "t");
  const std::string val_before = corpus::complaints_to_csv(split.validation);
  const std::string test_before = corpus::complaints_to_csv(split.test);

  aug::StubGenerator generator(4);
  aug::AugmentConfig cfg;
  const auto r = aug::augment_corpus(split, targets, generator, cfg);

  std::size_t within = 0, total_before = 0, total_after = 0, at_target = 0;
  for (const auto& [c, n] : base) {
    const auto& rep = r.report.classes.at(c);
    const std::size_t fin = rep.final_count();
    const std::size_t tgt = targets.target_for(c, n);
    within += fin >= n && fin <= tgt ? 1 : 0;
    at_target += fin == tgt ? 1 : 0;
    total_before += n;
    total_after += fin;
  }
  const bool untouched = corpus::complaints_to_csv(split.validation) == val_before &&
                         corpus::complaints_to_csv(split.test) == test_before;
  bool lineage = true;
  for (const auto& a : r.additions) lineage = lineage && a.source == Source::Augmented && a.parent_id.has_value();
  return {within == 14 && untouched && lineage,
          fmt::format("{}/14 classes within [base, target] ({} at target), {} -> {} samples, held-out partitions "
                      "byte-identical: {}",
                      within, at_target, total_before, total_after, untouched)};
}

// ---------------------------------------------------------- early stopping

Outcome early_stopping() {
  struct Case {
    std::vector<double> metrics;
    std::size_t best;
  };
  const std::vector<Case> cases = {
      {{0.1, 0.2, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.9}, 3},
      {{0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.95}, 1},
      {{0.50, 0.62, 0.61, 0.60, 0.61, 0.60, 0.61, 0.70}, 2},
      {{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.55, 0.55, 0.55, 0.55, 0.55, 0.99}, 6},
      {{0.4, 0.5, 0.4, 0.5, 0.4, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0}, 2},
  };
  std::size_t exact = 0;
  for (const auto& c : cases) {
    std::size_t snapshot = 0, calls = 0;
    const auto out = clf::run_epochs(
        30, 5, [&](std::size_t e) { ++calls; return c.metrics.at(e - 1); }, [&](std::size_t e) { snapshot = e; });
    exact += out.best_epoch == c.best && out.epochs_run == c.best + 5 && calls == c.best + 5 && snapshot == c.best &&
                     out.stopped_early && out.best_metric == c.metrics[c.best - 1]
                 ? 1
                 : 0;
  }
  // Repeat runs agree.
  const auto a = clf::run_epochs(30, 5, [&](std::size_t e) { return cases[3].metrics.at(e - 1); }, nullptr);
  const auto b = clf::run_epochs(30, 5, [&](std::size_t e) { return cases[3].metrics.at(e - 1); }, nullptr);
  const bool same = a.best_epoch == b.best_epoch && a.epochs_run == b.epochs_run;
  return {exact == cases.size() && same, fmt::format("{}/{} sequences halt at best_epoch + 5 with the best snapshot",
                                                     exact, cases.size())};
}

// ----------------------------------------------------------- smoke learning

const corpus::DatasetSplit& separable_split() {
  static const corpus::DatasetSplit s = [] {
    synth::SmokeOptions o;
    o.per_class = 120;
    return synth::smoke_split(synth::separable_corpus(o), 0.15, 0.2, 7);
  }();
  return s;
}

clf::TrainingConfig smoke_training(std::size_t epochs) {
  clf::TrainingConfig c;
  c.learning_rate = 1e-3;
  c.batch_size = 16;
  c.max_epochs = epochs;
  c.seed = 13;
  return c;
}

Outcome smoke_learning() {
  const auto& split = separable_split();
  std::string detail;
  bool ok = true;
  for (const auto& spec : clf::registry()) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = clf::train(split, spec, smoke_training(5));
    const double acc = accuracy(*r.model, split.test);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && acc >= 0.90 && r.history.epochs.size() <= 5 && secs < 900;
    detail += fmt::format("{} {:.3f} ({} ep, {:.1f}s); ", spec.model_id, acc, r.history.epochs.size(), secs);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto gbt = base::fit(split.train, base::BaselineKind::GradientBoostedTrees);
  const double gacc = accuracy(*gbt, split.test);
  const double gsecs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && gacc >= 0.85 && gsecs < 120;
  detail += fmt::format("gradient boosted trees {:.3f} ({:.1f}s)", gacc, gsecs);
  return {ok, detail};
}

// ----------------------------------------------------------- metric oracle

Outcome metric_oracle() {
  Rng rng(2718);
  std::size_t exact = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 2 + rng.below(13);
    const std::size_t n = 1 + rng.below(400);
    std::vector<eval::LabeledPrediction> preds;
    for (std::size_t i = 0; i < n; ++i) {
      const auto g = static_cast<CategoryLabel>(rng.below(k));
      const auto p = rng.below(3) == 0 ? g : static_cast<CategoryLabel>(rng.below(k));
      preds.push_back({g, p});
    }
    const auto rep = eval::evaluate(preds, eval::Averaging::Weighted, "r");
    const auto want = oracle::recompute(preds);
    bool same = rep.aggregate.accuracy == want.accuracy && rep.macro.precision == want.macro_p &&
                rep.macro.recall == want.macro_r && rep.macro.f1 == want.macro_f1 &&
                rep.weighted.precision == want.weighted_p && rep.weighted.recall == want.weighted_r &&
                rep.weighted.f1 == want.weighted_f1;
    for (const auto& [c, m] : rep.per_class) {
      const auto i = index_of(c);
      same = same && m.precision == want.precision[i] && m.recall == want.recall[i] && m.f1 == want.f1[i];
    }
    exact += same ? 1 : 0;
  }

  const json rows = json::parse(slurp("tests/golden/table_vi_fixture.json"));
  std::vector<eval::EvaluationReport> reps;
  for (const auto& row : rows) {
    eval::EvaluationReport r;
    r.model_name = row.at("model");
    r.aggregate = {row.at("accuracy"), row.at("precision"), row.at("recall"), row.at("f1"), eval::Averaging::Weighted};
    reps.push_back(r);
  }
  const bool golden = eval::compare(reps).markdown(2) == slurp("tests/golden/table_vi.md");
  return {exact == 100 && golden,
          fmt::format("{}/100 random sets equal the brute-force recomputation, golden table byte-identical: {}", exact,
                      golden)};
}

// -------------------------------------------------------- relative ordering

Outcome relative_ordering() {
  synth::SmokeOptions o;
  o.per_class = 120;
  const auto split = synth::smoke_split(synth::order_corpus(o), 0.15, 0.2, 7);
  auto weighted_f1 = [&](const Classifier& m, const std::string& name) {
    std::vector<eval::RawPrediction> preds;
    for (const auto& c : split.test) preds.push_back({std::string(to_string(*c.category)), m.predict(c.text)});
    return eval::evaluate(preds, eval::Averaging::Weighted, name, {}).weighted.f1;
  };
  auto cfg = smoke_training(10);
  const auto r = clf::train(split, clf::registry_spec("hingbert"), cfg);
  const double transformer = weighted_f1(*r.model, "hingbert");
  // The corpus vocabulary is tiny (about 50 terms); keep most of its rank.
  base::BaselineConfig bcfg;
  bcfg.features.reduced_dimension = 40;
  double best = 0;
  std::string best_name, detail;
  for (auto k : base::all_kinds()) {
    const auto m = base::fit(split.train, k, bcfg);
    const double f = weighted_f1(*m, std::string(base::display_name(k)));
    detail += fmt::format("{} {:.3f}, ", base::display_name(k), f);
    if (f > best) {
      best = f;
      best_name = base::display_name(k);
    }
  }
  return {transformer >= best, fmt::format("transformer weighted F1 {:.3f} >= best baseline {} {:.3f} ({})",
                                           transformer, best_name, best, detail.substr(0, detail.size() - 2))};
}

// ------------------------------------------------------------ round trip

Outcome checkpoint_round_trip() {
  const auto& split = separable_split();
  const auto r = clf::train(split, clf::registry_spec("roberta"), smoke_training(2));
  const fs::path dir = scratch("roundtrip") / "model";
  r.model->save(dir);
  const auto back = clf::TransformerClassifier::load(dir);
  const auto generic = load_classifier(dir);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& text = split.test[i].text;
    const Eigen::VectorXd a = r.model->logits(text);
    const Eigen::VectorXd b = back->logits(text);
    const bool bits = a.size() == b.size() &&
                      std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(double)) == 0;
    exact += bits && generic->predict(text).scores == r.model->predict(text).scores ? 1 : 0;
  }
  const bool fp = back->fingerprint() == r.model->fingerprint();
  return {exact == 10 && fp, fmt::format("{}/10 probes bit-exact, fingerprint preserved: {}", exact, fp)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    double budget_seconds;  // wall-clock ceiling; 0 = none
  };
  const std::vector<Criterion> criteria = {
      {"label standardization", label_standardization, 1.0},
      {"anonymizer coverage", anonymizer_coverage, 30.0},
      {"privacy sweep", privacy_sweep, 0},
      {"similarity oracle", similarity_oracle, 0},
      {"augmentation distribution", augmentation_distribution, 0},
      {"early stopping", early_stopping, 0},
      {"smoke-scale learning", smoke_learning, 0},  // per-model ceilings checked inside
      {"metric oracle", metric_oracle, 0},
      {"relative ordering", relative_ordering, 0},
      {"checkpoint round-trip", checkpoint_round_trip, 0},
  };
  std::size_t failed = 0;
  for (const auto& [name, fn, budget] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget > 0 && secs >= budget) {
      o.pass = false;
      o.detail += fmt::format("; over the {:.0f}s budget", budget);
    }
    failed += o.pass ? 0 : 1;
    std::cout << fmt::format("{} {} ({:.2f}s): {}", o.pass ? "PASS" : "FAIL", name, secs, o.detail) << std::endl;
  }
  std::cout << fmt::format("{}/{} criteria passed", criteria.size() - failed, criteria.size()) << std::endl;
  return failed == 0 ? 0 : 1;
}
