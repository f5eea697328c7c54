#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/SVD>

#include "triage/baselines.hpp"
#include "triage/errors.hpp"
#include "triage/rng.hpp"
#include "triage/synth.hpp"

using namespace triage;
namespace fs = std::filesystem;

namespace {

Complaint labeled(std::string id, std::string text, CategoryLabel c) {
  Complaint x;
  x.id = std::move(id);
  x.text = std::move(text);
  x.category = c;
  return x;
}

// Two classes with disjoint vocabularies.
Complaints disjoint_corpus() {
  Rng rng(4);
  const std::vector<std::string> a = {"upi", "paise", "bank", "otp", "refund", "wallet", "kyc", "debit"};
  const std::vector<std::string> b = {"ransom", "encrypt", "files", "decrypt", "backup", "lock", "note", "server"};
  Complaints out;
  for (int i = 0; i < 60; ++i) {
    const auto& v = i % 2 ? b : a;
    std::string t;
    for (int k = 0; k < 4; ++k) t += v[rng.below(v.size())] + " ";
    out.push_back(labeled("d-" + std::to_string(i), t,
                          i % 2 ? CategoryLabel::Ransomware : CategoryLabel::FinancialFraud));
  }
  return out;
}

base::BaselineConfig small_config() {
  base::BaselineConfig c;
  c.features.reduced_dimension = 8;
  c.gbt.rounds = 20;
  c.forest.trees = 20;
  c.ada.estimators = 20;
  return c;
}

}  // namespace

TEST_CASE("tf-idf weights match hand computation") {
  features::SparseFeaturizerConfig c;
  features::TfidfVectorizer v(c);
  v.fit({"aa bb", "aa cc"});
  REQUIRE(v.vocabulary_size() == 3);
  const auto x = v.transform("aa bb bb");
  REQUIRE(x.size() == 2);
  const double idf_a = 1.0;
  const double idf_b = std::log(3.0 / 2.0) + 1.0;
  const double na = idf_a, nb = 2 * idf_b;
  const double norm = std::sqrt(na * na + nb * nb);
  CHECK(x[0].first == 0);
  CHECK(x[0].second == doctest::Approx(na / norm).epsilon(1e-12));
  CHECK(x[1].second == doctest::Approx(nb / norm).epsilon(1e-12));
  CHECK(v.transform("zz yy").empty());

  c.idf_smoothing = false;
  features::TfidfVectorizer raw(c);
  raw.fit({"aa bb", "aa cc"});
  CHECK(raw.state().idf[1] == doctest::Approx(std::log(2.0) + 1.0));
}

TEST_CASE("tf-idf vocabulary cap, n-grams and punctuation") {
  features::SparseFeaturizerConfig c;
  c.vocabulary_size = 2;
  features::TfidfVectorizer v(c);
  v.fit({"aa aa aa bb bb cc", "aa, bb!"});
  CHECK(v.state().vocabulary == std::vector<std::string>{"aa", "bb"});
  c.vocabulary_size = 100;
  c.max_ngram = 2;
  CHECK(features::terms("Aa bb <PHONE>", c) ==
        std::vector<std::string>{"aa", "bb", "<PHONE>", "aa bb", "bb <PHONE>"});
}

TEST_CASE("randomized svd recovers the leading singular subspace") {
  Rng rng(9);
  const std::size_t n = 60, d = 40, k = 5;
  // Low-rank plus noise so the spectrum has a clear gap.
  Eigen::MatrixXd u(n, k), w(k, d);
  for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
  Eigen::MatrixXd dense = u * w;
  for (Eigen::Index i = 0; i < dense.size(); ++i) dense.data()[i] += 0.01 * rng.normal();
  std::vector<features::SparseVector> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) rows[i].emplace_back(static_cast<int>(j), dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  }
  features::TruncatedSvd svd;
  svd.fit(rows, d, k, 1);
  Eigen::BDCSVD<Eigen::MatrixXd> exact(dense, Eigen::ComputeThinV);
  for (std::size_t i = 0; i < k; ++i) {
    CHECK(svd.singular_values()[i] == doctest::Approx(exact.singularValues()(static_cast<Eigen::Index>(i))).epsilon(1e-9));
    // Same direction up to sign, and sign normalized.
    const auto& comp = svd.state().components;
    Eigen::VectorXd c(d);
    for (std::size_t j = 0; j < d; ++j) c(static_cast<Eigen::Index>(j)) = comp[i * d + j];
    CHECK(std::abs(c.dot(exact.matrixV().col(static_cast<Eigen::Index>(i)))) == doctest::Approx(1.0).epsilon(1e-8));
    Eigen::Index arg = 0;
    c.cwiseAbs().maxCoeff(&arg);
    CHECK(c(arg) > 0);
  }
  CHECK_THROWS_AS(svd.fit(rows, d, d, 1), ConfigError);
}

TEST_CASE("fit preconditions") {
  CHECK_THROWS_AS(base::fit({}, base::BaselineKind::GradientBoostedTrees), PreconditionError);
  Complaints small;
  for (int i = 0; i < 100; ++i) {
    small.push_back(labeled("w" + std::to_string(i), "word" + std::to_string(i),
                            i % 2 ? CategoryLabel::Ransomware : CategoryLabel::FinancialFraud));
  }
  base::BaselineConfig c;
  c.features.reduced_dimension = 5000;
  CHECK_THROWS_AS(base::fit(small, base::BaselineKind::KNearestNeighbors, c), ConfigError);
  CHECK(base::parse_kind("xgboost") == base::BaselineKind::GradientBoostedTrees);
  CHECK(base::parse_kind("knn") == base::BaselineKind::KNearestNeighbors);
  CHECK_THROWS_AS(base::parse_kind("svm"), ConfigError);
}

TEST_CASE("disjoint vocabularies are fit perfectly by every baseline") {
  const auto train = disjoint_corpus();
  for (auto kind : base::all_kinds()) {
    CAPTURE(base::to_string(kind));
    auto m = base::fit(train, kind, small_config());
    std::size_t ok = 0;
    for (const auto& c : train) ok += m->predict(c.text).label == *c.category ? 1 : 0;
    CHECK(ok == train.size());
  }
}

TEST_CASE("out-of-vocabulary text falls back to the majority class") {
  auto train = disjoint_corpus();
  train.push_back(labeled("extra", "upi paise", CategoryLabel::FinancialFraud));
  auto m = base::fit(train, base::BaselineKind::GradientBoostedTrees, small_config());
  const auto p = m->predict("zzzz qqqq");
  CHECK(p.fallback);
  CHECK(p.label == CategoryLabel::FinancialFraud);
  double sum = 0;
  for (double s : p.scores) sum += s;
  CHECK(std::abs(sum - 1.0) < 1e-9);
  CHECK_FALSE(m->predict("upi bank").fallback);
  CHECK(m->predict("zzzz qqqq").scores == p.scores);
  CHECK_THROWS_AS(m->predict(" "), PreconditionError);
}

TEST_CASE("baseline persistence round-trips and detects tampering") {
  const auto train = disjoint_corpus();
  for (auto kind : base::all_kinds()) {
    auto m = base::fit(train, kind, small_config());
    const auto dir = fs::temp_directory_path() / ("triage_base_" + std::string(base::short_name(kind)));
    fs::remove_all(dir);
    m->save(dir);
    auto back = base::BaselineModel::load(dir);
    CHECK(back->fingerprint() == m->fingerprint());
    for (const auto& c : train) CHECK(back->predict(c.text).scores == m->predict(c.text).scores);
    {
      std::fstream f(dir / "model.bin", std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(40);
      f.put('\x55');
    }
    CHECK_THROWS_AS(base::BaselineModel::load(dir), IntegrityError);
    fs::remove(dir / "model.bin");
    CHECK_THROWS_AS(base::BaselineModel::load(dir), MissingArtifactError);
    fs::remove_all(dir);
  }
}

TEST_CASE("training ids bind the fingerprint and guard against leakage") {
  synth::SmokeOptions o;
  o.per_class = 40;
  const auto split = synth::smoke_split(synth::separable_corpus(o), 0.2, 0.2, 3);
  auto cfg = small_config();
  auto a = base::fit(split.train, base::BaselineKind::RandomForest, cfg);
  auto a2 = base::fit(split.train, base::BaselineKind::RandomForest, cfg);
  CHECK(a->fingerprint() == a2->fingerprint());
  auto merged = split.train;
  merged.insert(merged.end(), split.validation.begin(), split.validation.end());
  auto b = base::fit(merged, base::BaselineKind::RandomForest, cfg);
  CHECK(a->fingerprint() != b->fingerprint());
  CHECK(a->training_ids_hash() != b->training_ids_hash());
  CHECK_NOTHROW(a->check_disjoint(split.test));
  CHECK_THROWS_AS(b->check_disjoint(split.validation), PreconditionError);
}

TEST_CASE("every baseline beats chance on its own training data") {
  Rng rng(21);
  for (int trial = 0; trial < 3; ++trial) {
    Complaints train;
    const std::vector<CategoryLabel> cls = {CategoryLabel::FinancialFraud, CategoryLabel::Ransomware,
                                            CategoryLabel::HackingDamage};
    for (int i = 0; i < 90; ++i) {
      std::string t;
      for (int k = 0; k < 5; ++k) t += "w" + std::to_string(rng.below(30)) + " ";
      train.push_back(labeled("r" + std::to_string(i), t, cls[rng.below(3)]));
    }
    for (auto kind : base::all_kinds()) {
      auto m = base::fit(train, kind, small_config());
      std::size_t ok = 0;
      for (const auto& c : train) ok += m->predict(c.text).label == *c.category ? 1 : 0;
      CHECK(static_cast<double>(ok) / 90.0 >= 1.0 / 3.0);
    }
  }
}

TEST_CASE("learners on hand-made data") {
  // y = 1 iff x0 > 0.5; x1 is noise.
  Eigen::MatrixXd x(8, 2);
  x << 0.1, 5, 0.2, 1, 0.3, 7, 0.4, 2, 0.6, 3, 0.7, 8, 0.8, 4, 0.9, 6;
  std::vector<int> y = {0, 0, 0, 0, 1, 1, 1, 1};
  std::vector<double> w(8, 1.0);
  auto tree = learn::fit_cart(x, y, w, 2, {}, 1);
  REQUIRE(tree[0].feature == 0);
  CHECK(tree[0].threshold == doctest::Approx(0.5));

  // Boosting needs enough hessian mass per child (min_child_weight 1).
  Eigen::MatrixXd xr(80, 2);
  std::vector<int> yr;
  for (int r = 0; r < 10; ++r) {
    xr.middleRows(r * 8, 8) = x;
    yr.insert(yr.end(), y.begin(), y.end());
  }
  learn::GradientBoostedTrees gbt;
  gbt.params.rounds = 10;
  gbt.fit(xr, yr, 2);
  Eigen::VectorXd probe(2);
  probe << 0.95, 1;
  CHECK(gbt.predict_proba(probe)[1] > 0.9);

  learn::KNearestNeighbors knn;
  knn.k = 3;
  knn.fit(x, y, 2);
  probe << 0.52, 5;
  // Three nearest: (0.1,5) class 0, (0.8,4) and (0.9,6) class 1.
  auto p = knn.predict_proba(probe);
  CHECK(p[0] == doctest::Approx(1.0 / 3));
  CHECK(p[1] == doctest::Approx(2.0 / 3));

  learn::AdaBoost ada;
  ada.fit(x, y, 2);
  probe << 0.05, 5;
  CHECK(ada.predict_proba(probe)[0] > 0.5);
}
