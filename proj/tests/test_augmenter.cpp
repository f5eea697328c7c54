#include <doctest.h>

#include <chrono>
#include <cmath>

#include "triage/augmenter.hpp"
#include "triage/errors.hpp"
#include "triage/rng.hpp"
#include "triage/synth.hpp"

using namespace triage;
using namespace triage::aug;

namespace {

Eigen::RowVectorXd v2(double a, double b) {
  Eigen::RowVectorXd v(2);
  v << a, b;
  return v;
}

AugmentationCandidate cand(double sim, std::string text = "kuch bhi hua") {
  AugmentationCandidate c;
  c.parent_id = "p";
  c.generated_text = std::move(text);
  c.similarity = sim;
  return c;
}

// Returns fixed completions regardless of the prompt.
class ScriptedGenerator final : public GeneratorClient {
 public:
  explicit ScriptedGenerator(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::vector<std::string> generate(const std::string&, std::size_t n) override {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(replies_[i % replies_.size()]);
    return out;
  }
  std::string model_id() const override { return "scripted"; }

 private:
  std::vector<std::string> replies_;
};

class DeadGenerator final : public GeneratorClient {
 public:
  std::size_t calls = 0;
  std::vector<std::string> generate(const std::string&, std::size_t) override {
    ++calls;
    throw GeneratorUnavailable("down");
  }
  std::string model_id() const override { return "dead"; }
};

corpus::DatasetSplit small_split() {
  std::map<CategoryLabel, std::size_t> counts = {{CategoryLabel::Ransomware, 6},
                                                 {CategoryLabel::FinancialFraud, 10}};
  corpus::DatasetSplit s;
  s.train = synth::sized_corpus(counts, 3);
  s.validation = synth::sized_corpus({{CategoryLabel::Ransomware, 2}}, 4);
  for (auto& c : s.validation) c.id = "v" + c.id;
  s.test = synth::sized_corpus({{CategoryLabel::FinancialFraud, 2}}, 5);
  for (auto& c : s.test) c.id = "t" + c.id;
  return s;
}

AugmentConfig plain_config() {
  AugmentConfig c;
  c.reanonymize = false;
  return c;
}

}  // namespace

TEST_CASE("cleanup segments numbered completions") {
  CHECK(cleanup("1. A hua\n\n2. B hua") == std::vector<std::string>{"A hua", "B hua"});
  CHECK(cleanup("   text   ") == std::vector<std::string>{"text"});
  CHECK(cleanup("\n\n").empty());
  CHECK(cleanup("").empty());
}

TEST_CASE("cleanup handles markers, preambles, quotes and continuations") {
  const auto out = cleanup(
      "Here are the paraphrases:\n1) \"paise kat gaye\"\n- account   hack\n   hua tha\n* (3) extra\n"
      "\xE2\x80\xA2 bullet wala\n(4) bracket wala\n\n1.5 lakh gaye");
  CHECK(out == std::vector<std::string>{"paise kat gaye", "account hack hua tha", "(3) extra",
                                        "bullet wala", "bracket wala", "1.5 lakh gaye"});
  CHECK(cleanup("1. ok\n2. !!!\n3. -").size() == 1);
  CHECK(cleanup("1. ek do\n2. teen", 2) == std::vector<std::string>{"ek do"});
}

TEST_CASE("greedy F1 hand cases") {
  SUBCASE("orthogonal") {
    Eigen::MatrixXd a(1, 2), b(1, 2);
    a << 1, 0;
    b << 0, 1;
    const auto s = greedy_f1(a, b);
    CHECK(s.precision == 0.0);
    CHECK(s.recall == 0.0);
    CHECK(s.f1 == 0.0);
  }
  SUBCASE("partial coverage") {
    Eigen::MatrixXd src(2, 2), c(1, 2);
    src << 1, 0, 0, 1;
    c << 1, 0;
    const auto s = greedy_f1(src, c);
    CHECK(s.precision == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.recall == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("empty side is a precondition failure") {
    CHECK_THROWS_AS(greedy_f1(Eigen::MatrixXd(0, 2), Eigen::MatrixXd::Ones(1, 2)), PreconditionError);
  }
}

TEST_CASE("similarity with a stub encoder") {
  StubEncoder enc({{"a", v2(1, 0)}, {"b", v2(0, 1)}, {"c", v2(1, 1)}, {"d", v2(-1, 0)}});
  SimilarityGateConfig cfg;
  CHECK(similarity("a", "b", cfg, enc) == 0.0);
  CHECK(similarity("a b", "a", cfg, enc) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  // cos(a,c) = 1/sqrt2 both ways
  CHECK(similarity("a", "c", cfg, enc) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  // negative cosine clamps to zero
  CHECK(similarity("a", "d", cfg, enc) == 0.0);
  CHECK_THROWS_AS(similarity("a", "zz", cfg, enc), EncoderError);
  CHECK_THROWS_AS(similarity("", "a", cfg, enc), PreconditionError);
  CHECK_THROWS_AS(similarity("a", "  ", cfg, enc), PreconditionError);

  cfg.mode = SimilarityMode::SentenceCosine;
  // mean(a,b) = (0.5,0.5) vs a
  CHECK(similarity("a b", "a", cfg, enc) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("similarity self and symmetry with the hashed encoder") {
  HashedNgramEncoder enc;
  SimilarityGateConfig cfg;
  Rng rng(8);
  const std::vector<std::string> words = {"paise", "kat", "gaye", "<PHONE>", "upi", "se", "fraud",
                                          "hua", "bhai", "account", "hack", "ho", "gaya"};
  for (int t = 0; t < 100; ++t) {
    std::string a, b;
    for (std::size_t i = 0, n = 1 + rng.below(8); i < n; ++i) a += words[rng.below(words.size())] + " ";
    for (std::size_t i = 0, n = 1 + rng.below(8); i < n; ++i) b += words[rng.below(words.size())] + " ";
    CHECK(std::abs(similarity(a, a, cfg, enc) - 1.0) < 1e-6);
    CHECK(std::abs(similarity(a, b, cfg, enc) - similarity(b, a, cfg, enc)) < 1e-12);
    const double s = similarity(a, b, cfg, enc);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  cfg.mode = SimilarityMode::SentenceCosine;
  CHECK(std::abs(similarity("paise kat gaye", "paise kat gaye", cfg, enc) - 1.0) < 1e-6);
}

TEST_CASE("gate threshold is inclusive and checks duplicates") {
  SimilarityGateConfig cfg;
  auto r = gate({cand(0.98), cand(0.9699, "doosra text"), cand(0.97, "teesra text")}, cfg);
  REQUIRE(r.accepted.size() == 2);
  REQUIRE(r.rejected.size() == 1);
  CHECK(r.rejected[0].rejection_reason == RejectionReason::BelowThreshold);
  CHECK_FALSE(r.rejected[0].accepted);
  for (const auto& a : r.accepted) {
    CHECK(a.accepted);
    CHECK_FALSE(a.rejection_reason.has_value());
    CHECK(a.similarity >= cfg.theta);
  }

  std::unordered_set<std::string> existing = {"paise kat gaye"};
  auto d = gate({cand(0.99, "Paise  KAT gaye"), cand(0.99, ""), cand(0.99, "naya"), cand(0.99, "NAYA")}, cfg,
                existing);
  REQUIRE(d.accepted.size() == 1);
  CHECK(d.accepted[0].generated_text == "naya");
  REQUIRE(d.rejected.size() == 3);
  CHECK(d.rejected[0].rejection_reason == RejectionReason::DuplicateOfExisting);
  CHECK(d.rejected[1].rejection_reason == RejectionReason::EmptyAfterCleanup);
  CHECK(d.rejected[2].rejection_reason == RejectionReason::DuplicateOfExisting);

  cfg.theta = 1.5;
  CHECK_THROWS_AS(gate({cand(1.0)}, cfg), ConfigError);
}

TEST_CASE("gate is monotone in theta") {
  Rng rng(77);
  std::vector<AugmentationCandidate> cs;
  for (int i = 0; i < 1000; ++i) cs.push_back(cand(rng.uniform(), "t" + std::to_string(i)));
  std::size_t prev = cs.size() + 1;
  for (double theta = 0.0; theta <= 1.0; theta += 0.01) {
    SimilarityGateConfig cfg;
    cfg.theta = theta;
    const auto n = gate(cs, cfg).accepted.size();
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("stub generator returns distinct word-order variants") {
  StubGenerator gen;
  const auto a = gen.generate("Paraphrase.\nComplaint: ek do teen char paanch", 3);
  REQUIRE(a.size() == 3);
  CHECK(a[0] == "1. do ek teen char paanch\n");
  const auto b = gen.generate("Complaint: ek do teen char paanch", 2);
  CHECK(cleanup(b[0]).front() != cleanup(a[0]).front());
  CHECK(gen.generate("Complaint: x", 0).empty());
}

TEST_CASE("generate_candidates contracts") {
  Complaint c;
  c.id = "c1";
  c.text = "paise kat gaye";
  c.category = CategoryLabel::FinancialFraud;
  StubGenerator stub;
  CHECK(generate_candidates(c, 0, stub).completions.empty());
  CHECK(generate_candidates(c, 3, stub).completions.size() == 3);

  DeadGenerator dead;
  const auto out = generate_candidates(c, 3, dead);
  CHECK(out.failed);
  CHECK(out.completions.empty());

  HttpGeneratorClient::Options o;
  o.base_url = "http://127.0.0.1:9";
  o.retry.attempts = 2;
  o.retry.backoff = std::chrono::milliseconds(1);
  o.retry.timeout = std::chrono::milliseconds(200);
  HttpGeneratorClient http(o);
  const auto h = generate_candidates(c, 2, http);
  CHECK(h.failed);
  CHECK(h.completions.empty());

  CHECK(render_prompt("{n}|{text}|{category}", c, 4) == "4|paise kat gaye|Financial Fraud");
  CHECK_THROWS_AS(render_prompt("{oops", c, 1), ConfigError);
}

TEST_CASE("target distribution loading and validation") {
  const auto t = TargetDistribution::load("data/augmentation_targets.json");
  CHECK(t.targets.size() == kNumCategories);
  std::size_t total = 0;
  for (const auto& [c, n] : t.targets) total += n;
  CHECK(total == 109294);
  CHECK(t.target_for(CategoryLabel::Ransomware, 56) == 273);

  CHECK_THROWS_AS(t.validate({{CategoryLabel::Ransomware, 300}}), ConfigError);
  CHECK_NOTHROW(t.validate({{CategoryLabel::Ransomware, 273}}));
  CHECK_THROWS_AS(TargetDistribution::from_json({{"targets", {{"Nope", 3}}}}), UnknownLabelError);
  CHECK_THROWS_AS(TargetDistribution::from_json({{"targets", {{"Ransomware", -1}}}}), ConfigError);
  CHECK_THROWS_AS(TargetDistribution::from_json(nlohmann::json::object()), ConfigError);
  CHECK(TargetDistribution::from_json(t.to_json()).targets == t.targets);

  const auto m = TargetDistribution::from_multiplier(
      {{CategoryLabel::Ransomware, 10}, {CategoryLabel::FinancialFraud, 1000}}, 3.0, 500);
  CHECK(m.targets.at(CategoryLabel::Ransomware) == 30);
  CHECK(m.targets.at(CategoryLabel::FinancialFraud) == 1000);
  CHECK_THROWS_AS(TargetDistribution::from_multiplier({}, 0.5, 10), ConfigError);
}

TEST_CASE("augment_corpus reaches targets with the stub generator") {
  const auto split = small_split();
  const auto before_val = corpus::complaints_to_csv(split.validation);
  const auto before_test = corpus::complaints_to_csv(split.test);
  TargetDistribution t;
  t.targets = {{CategoryLabel::Ransomware, 20}, {CategoryLabel::FinancialFraud, 10}};
  StubGenerator gen;
  const auto r = augment_corpus(split, t, gen, plain_config());

  CHECK(corpus::complaints_to_csv(split.validation) == before_val);
  CHECK(corpus::complaints_to_csv(split.test) == before_test);
  CHECK(r.additions.size() == 14);
  const auto& rr = r.report.classes.at(CategoryLabel::Ransomware);
  CHECK(rr.accepted == 14);
  CHECK(rr.final_count() == 20);
  CHECK_FALSE(rr.warning.has_value());
  CHECK(r.report.classes.at(CategoryLabel::FinancialFraud).accepted == 0);
  CHECK(r.report.classes.at(CategoryLabel::FinancialFraud).attempted == 0);

  std::map<std::string, const Complaint*> parents;
  for (const auto& c : split.train) parents[c.id] = &c;
  std::set<std::string> ids;
  for (const auto& a : r.additions) {
    CHECK(a.source == Source::Augmented);
    REQUIRE(a.parent_id.has_value());
    REQUIRE(parents.count(*a.parent_id) == 1);
    CHECK(parents.at(*a.parent_id)->category == a.category);
    CHECK(a.id.rfind("a-", 0) == 0);
    CHECK(ids.insert(a.id).second);
    CHECK_NOTHROW(a.validate());
  }
  const auto j = r.report.to_json();
  CHECK(j.at("Ransomware").at("final") == 20);
  CHECK(j.at("Ransomware").at("rejected_by_reason").contains("below_threshold"));
  CHECK(r.report.run_metadata().at("prompt_template") == std::string(kDefaultPromptTemplate));
}

TEST_CASE("augment_corpus is deterministic and re-anonymizes") {
  auto split = small_split();
  split.train[0].text = "mera number 9876543210 hai aur paise kat gaye bank se jaldi";
  split.train[0].category = CategoryLabel::Ransomware;
  TargetDistribution t;
  t.targets = {{CategoryLabel::Ransomware, 30}};
  StubGenerator g1, g2;
  AugmentConfig cfg;
  const auto a = augment_corpus(split, t, g1, cfg);
  const auto b = augment_corpus(split, t, g2, cfg);
  REQUIRE(a.additions.size() == b.additions.size());
  for (std::size_t i = 0; i < a.additions.size(); ++i) CHECK(a.additions[i].text == b.additions[i].text);
  for (const auto& x : a.additions) CHECK(x.text.find("9876543210") == std::string::npos);
}

TEST_CASE("augment_corpus budget and failure accounting") {
  const auto split = small_split();
  TargetDistribution t;
  t.targets = {{CategoryLabel::Ransomware, 9}};

  SUBCASE("strict gate exhausts the budget with a warning") {
    ScriptedGenerator gen({"1. bilkul alag baat\n2. kuch aur"});
    const auto r = augment_corpus(split, t, gen, plain_config());
    const auto& cr = r.report.classes.at(CategoryLabel::Ransomware);
    CHECK(r.additions.empty());
    CHECK(cr.attempted == 60);
    CHECK(cr.warning.has_value());
    CHECK(cr.rejected_by_reason.at(RejectionReason::BelowThreshold) == 120);
  }
  SUBCASE("empty completions") {
    ScriptedGenerator gen({"\n\n"});
    const auto r = augment_corpus(split, t, gen, plain_config());
    CHECK(r.report.classes.at(CategoryLabel::Ransomware).rejected_by_reason.at(
              RejectionReason::EmptyAfterCleanup) == 60);
  }
  SUBCASE("echoing the source is a duplicate") {
    class Echo final : public GeneratorClient {
     public:
      std::vector<std::string> generate(const std::string& p, std::size_t n) override {
        return std::vector<std::string>(n, p.substr(p.rfind("Complaint:") + 10));
      }
      std::string model_id() const override { return "echo"; }
    } gen;
    const auto r = augment_corpus(split, t, gen, plain_config());
    CHECK(r.report.classes.at(CategoryLabel::Ransomware).rejected_by_reason.at(
              RejectionReason::DuplicateOfExisting) == 60);
  }
  SUBCASE("dead backend is not an error") {
    DeadGenerator gen;
    const auto r = augment_corpus(split, t, gen, plain_config());
    const auto& cr = r.report.classes.at(CategoryLabel::Ransomware);
    CHECK(cr.generation_failures == 60);
    CHECK(cr.warning.has_value());
    CHECK(gen.calls == 12);
  }
  SUBCASE("targets below base are rejected") {
    TargetDistribution bad;
    bad.targets = {{CategoryLabel::Ransomware, 2}};
    StubGenerator gen;
    CHECK_THROWS_AS(augment_corpus(split, bad, gen, plain_config()), ConfigError);
  }
}

TEST_CASE("augment_corpus with concurrent generation matches serial") {
  const auto split = small_split();
  TargetDistribution t;
  t.targets = {{CategoryLabel::Ransomware, 25}, {CategoryLabel::FinancialFraud, 22}};
  StubGenerator serial(1), parallel(4);
  const auto a = augment_corpus(split, t, serial, plain_config());
  const auto b = augment_corpus(split, t, parallel, plain_config());
  CHECK(a.additions.size() == 31);
  REQUIRE(a.additions.size() == b.additions.size());
  for (std::size_t i = 0; i < a.additions.size(); ++i) {
    CHECK(a.additions[i].text == b.additions[i].text);
    CHECK(a.additions[i].parent_id == b.additions[i].parent_id);
  }
}

TEST_CASE("augment config json") {
  auto c = AugmentConfig::from_json({{"gate", {{"theta", 0.9}, {"mode", "sentence_cosine"}}},
                                     {"candidates_per_call", 3}});
  CHECK(c.gate.theta == 0.9);
  CHECK(c.gate.mode == SimilarityMode::SentenceCosine);
  CHECK(AugmentConfig::from_json(c.to_json()).to_json() == c.to_json());
  CHECK_THROWS_AS(AugmentConfig::from_json({{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(AugmentConfig::from_json({{"gate", {{"theta", 2.0}}}}), ConfigError);
  CHECK_THROWS_AS(make_encoder("word2vec"), ConfigError);
}
