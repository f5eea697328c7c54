#include "triage/baselines.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/utility.hpp>
#include <cereal/types/variant.hpp>
#include <cereal/types/vector.hpp>

#include "triage/errors.hpp"
#include "triage/hashing.hpp"
#include "triage/text.hpp"

namespace triage {
namespace learn {

template <class Ar>
void serialize(Ar& ar, TreeNode& n) {
  ar(n.feature, n.threshold, n.left, n.right, n.value);
}
template <class Ar>
void serialize(Ar& ar, GbtParams& p) {
  ar(p.rounds, p.learning_rate, p.max_depth, p.lambda, p.gamma, p.min_child_weight, p.max_bins);
}
template <class Ar>
void serialize(Ar& ar, GradientBoostedTrees& m) {
  ar(m.params, m.num_classes, m.trees);
}
template <class Ar>
void serialize(Ar& ar, ForestParams& p) {
  ar(p.trees, p.min_samples_leaf, p.seed);
}
template <class Ar>
void serialize(Ar& ar, RandomForest& m) {
  ar(m.params, m.num_classes, m.trees);
}
template <class Ar>
void serialize(Ar& ar, AdaParams& p) {
  ar(p.estimators, p.learning_rate);
}
template <class Ar>
void serialize(Ar& ar, AdaBoost& m) {
  ar(m.params, m.num_classes, m.stumps, m.alphas);
}
template <class Ar>
void serialize(Ar& ar, KNearestNeighbors& m) {
  ar(m.k, m.num_classes, m.dim, m.points, m.labels);
}

}  // namespace learn

namespace features {

template <class Ar>
void serialize(Ar& ar, TfidfVectorizer::State& s) {
  ar(s.vocabulary, s.idf);
}
template <class Ar>
void serialize(Ar& ar, TruncatedSvd::State& s) {
  ar(s.rows, s.cols, s.components, s.singular_values);
}

}  // namespace features

namespace base {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

struct KindInfo {
  BaselineKind kind;
  std::string_view name, short_name, display;
};

constexpr KindInfo kKinds[] = {
    {BaselineKind::GradientBoostedTrees, "gradient_boosted_trees", "xgboost", "XGBoost"},
    {BaselineKind::RandomForest, "random_forest", "rf", "Random Forest"},
    {BaselineKind::AdaptiveBoosting, "adaptive_boosting", "ada", "AdaBoost"},
    {BaselineKind::KNearestNeighbors, "k_nearest_neighbors", "knn", "k-NN"},
};

const KindInfo& info(BaselineKind k) {
  for (const auto& i : kKinds) {
    if (i.kind == k) return i;
  }
  throw ConfigError("unknown baseline kind");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("missing artifact: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json labels_json(const std::vector<CategoryLabel>& labels) {
  json j = json::array();
  for (auto l : labels) j.push_back(std::string(to_string(l)));
  return j;
}

}  // namespace

BaselineKind parse_kind(std::string_view s) {
  if (s == "gbt") return BaselineKind::GradientBoostedTrees;
  if (s == "random_forest") return BaselineKind::RandomForest;
  if (s == "adaboost") return BaselineKind::AdaptiveBoosting;
  for (const auto& i : kKinds) {
    if (s == i.name || s == i.short_name) return i.kind;
  }
  throw ConfigError("unknown baseline kind: " + std::string(s) + " (xgboost|rf|ada|knn)");
}

std::string_view to_string(BaselineKind k) { return info(k).name; }
std::string_view short_name(BaselineKind k) { return info(k).short_name; }
std::string_view display_name(BaselineKind k) { return info(k).display; }

const std::vector<BaselineKind>& all_kinds() {
  static const std::vector<BaselineKind> k = {
      BaselineKind::GradientBoostedTrees, BaselineKind::RandomForest,
      BaselineKind::AdaptiveBoosting, BaselineKind::KNearestNeighbors};
  return k;
}

json BaselineConfig::to_json() const {
  return {{"features", features.to_json()},
          {"gbt",
           {{"rounds", gbt.rounds},
            {"learning_rate", gbt.learning_rate},
            {"max_depth", gbt.max_depth},
            {"lambda", gbt.lambda},
            {"gamma", gbt.gamma},
            {"min_child_weight", gbt.min_child_weight},
            {"max_bins", gbt.max_bins}}},
          {"random_forest",
           {{"trees", forest.trees}, {"min_samples_leaf", forest.min_samples_leaf}, {"seed", forest.seed}}},
          {"adaboost", {{"estimators", ada.estimators}, {"learning_rate", ada.learning_rate}}},
          {"knn", {{"k", knn_k}}}};
}

BaselineConfig BaselineConfig::from_json(const json& j) {
  BaselineConfig c;
  if (j.contains("features")) c.features = features::SparseFeaturizerConfig::from_json(j.at("features"));
  if (j.contains("gbt")) {
    const auto& g = j.at("gbt");
    c.gbt.rounds = g.value("rounds", c.gbt.rounds);
    c.gbt.learning_rate = g.value("learning_rate", c.gbt.learning_rate);
    c.gbt.max_depth = g.value("max_depth", c.gbt.max_depth);
    c.gbt.lambda = g.value("lambda", c.gbt.lambda);
    c.gbt.gamma = g.value("gamma", c.gbt.gamma);
    c.gbt.min_child_weight = g.value("min_child_weight", c.gbt.min_child_weight);
    c.gbt.max_bins = g.value("max_bins", c.gbt.max_bins);
  }
  if (j.contains("random_forest")) {
    const auto& f = j.at("random_forest");
    c.forest.trees = f.value("trees", c.forest.trees);
    c.forest.min_samples_leaf = f.value("min_samples_leaf", c.forest.min_samples_leaf);
    c.forest.seed = f.value("seed", c.forest.seed);
  }
  if (j.contains("adaboost")) {
    const auto& a = j.at("adaboost");
    c.ada.estimators = a.value("estimators", c.ada.estimators);
    c.ada.learning_rate = a.value("learning_rate", c.ada.learning_rate);
  }
  if (j.contains("knn")) c.knn_k = j.at("knn").value("k", c.knn_k);
  if (c.knn_k == 0) throw ConfigError("knn.k must be positive");
  if (c.gbt.max_bins < 2 || c.gbt.max_bins > 65535) throw ConfigError("gbt.max_bins out of range");
  return c;
}

BaselineModel::BaselineModel(State state) : state_(std::move(state)) {
  state_.vectorizer.rebuild_index();
  Sha256 h;
  h.field("baseline").field(serialize()).field(state_.config.to_json().dump());
  fingerprint_ = h.hex();
}

std::vector<CategoryLabel> BaselineModel::label_order() const {
  return {all_categories().begin(), all_categories().end()};
}

std::string BaselineModel::training_ids_hash() const {
  Sha256 h;
  for (const auto& id : state_.training_ids) h.field(id);
  return h.hex();
}

void BaselineModel::check_disjoint(const Complaints& complaints) const {
  for (const auto& c : complaints) {
    if (std::binary_search(state_.training_ids.begin(), state_.training_ids.end(), c.id)) {
      throw PreconditionError("complaint " + c.id + " was part of the baseline's training data");
    }
  }
}

PredictionResult BaselineModel::predict(std::string_view text) const {
  if (text::is_blank(text)) throw PreconditionError("cannot classify empty text");
  const auto order = label_order();
  std::vector<double> scores(order.size(), 0.0);
  const auto sparse = state_.vectorizer.transform(text);
  std::vector<double> probs;
  bool fallback = false;
  if (sparse.empty()) {
    // Nothing in the fitted vocabulary: answer the training-class prior,
    // whose argmax is the majority class.
    probs = state_.prior;
    fallback = true;
  } else {
    const Eigen::VectorXd z = state_.reducer.transform(sparse);
    probs = std::visit([&](const auto& m) { return m.predict_proba(z); }, state_.learner);
  }
  for (std::size_t i = 0; i < state_.classes.size(); ++i) {
    scores[index_of(state_.classes[i])] = probs[i];
  }
  auto r = make_prediction(order, std::move(scores), fingerprint_);
  r.fallback = fallback;
  return r;
}

std::string BaselineModel::serialize() const {
  std::ostringstream os(std::ios::binary);
  {
    cereal::PortableBinaryOutputArchive ar(os);
    std::vector<int> classes;
    for (auto c : state_.classes) classes.push_back(static_cast<int>(index_of(c)));
    ar(static_cast<int>(state_.kind), state_.vectorizer.state(), state_.reducer.state(),
       state_.learner, classes, state_.prior, state_.training_ids);
  }
  return os.str();
}

void BaselineModel::save(const fs::path& dir) const {
  fs::create_directories(dir);
  const std::string blob = serialize();
  {
    std::ofstream out(dir / "model.bin", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "model.bin").string());
    out << blob;
  }
  json meta = {{"format_version", kFormatVersion},
               {"kind", "baseline"},
               {"model_id", std::string(short_name(state_.kind))},
               {"baseline_kind", std::string(to_string(state_.kind))},
               {"display_name", std::string(display_name(state_.kind))},
               {"config", state_.config.to_json()},
               {"label_order", labels_json(label_order())},
               {"classes", labels_json(state_.classes)},
               {"vocabulary_size", state_.vectorizer.vocabulary_size()},
               {"training_ids_sha256", training_ids_hash()},
               {"blob_sha256", sha256_hex(blob)},
               {"fingerprint", fingerprint_}};
  std::ofstream(dir / "metadata.json") << meta.dump(2) << "\n";
}

std::unique_ptr<BaselineModel> BaselineModel::load(const fs::path& dir) {
  for (const char* name : {"metadata.json", "model.bin"}) {
    if (!fs::exists(dir / name)) {
      throw MissingArtifactError("baseline " + dir.string() + " is missing " + name);
    }
  }
  json meta;
  try {
    meta = json::parse(read_file(dir / "metadata.json"));
  } catch (const json::exception& e) {
    throw IntegrityError("baseline metadata is not valid JSON: " + std::string(e.what()));
  }
  const std::string blob = read_file(dir / "model.bin");
  try {
    if (meta.at("kind") != "baseline") throw IntegrityError("checkpoint is not a baseline model");
    if (sha256_hex(blob) != meta.at("blob_sha256").get<std::string>()) {
      throw IntegrityError("model blob does not match the fingerprint recorded in metadata");
    }
    State s;
    s.config = BaselineConfig::from_json(meta.at("config"));
    std::istringstream is(blob, std::ios::binary);
    cereal::PortableBinaryInputArchive ar(is);
    int kind = 0;
    std::vector<int> classes;
    ar(kind, s.vectorizer.state(), s.reducer.state(), s.learner, classes, s.prior, s.training_ids);
    s.kind = static_cast<BaselineKind>(kind);
    s.vectorizer.set_config(s.config.features);
    for (int c : classes) s.classes.push_back(all_categories().at(static_cast<std::size_t>(c)));
    auto model = std::make_unique<BaselineModel>(std::move(s));
    if (model->fingerprint() != meta.at("fingerprint").get<std::string>()) {
      throw IntegrityError("baseline metadata does not match its fingerprint");
    }
    return model;
  } catch (const json::exception& e) {
    throw IntegrityError("baseline metadata is malformed: " + std::string(e.what()));
  } catch (const cereal::Exception& e) {
    throw IntegrityError("baseline blob is malformed: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw IntegrityError("baseline metadata is malformed: " + std::string(e.what()));
  }
}

std::unique_ptr<BaselineModel> fit(const Complaints& train, BaselineKind kind,
                                   const BaselineConfig& config) {
  if (train.empty()) throw PreconditionError("cannot fit a baseline on an empty training set");
  config.features.validate();
  BaselineModel::State s;
  s.kind = kind;
  s.config = config;

  std::map<CategoryLabel, std::size_t> counts;
  std::vector<std::string> texts;
  for (const auto& c : train) {
    if (!c.category) throw PreconditionError("training complaint " + c.id + " has no category");
    ++counts[*c.category];
    texts.push_back(c.text);
    s.training_ids.push_back(c.id);
  }
  std::sort(s.training_ids.begin(), s.training_ids.end());
  std::map<CategoryLabel, int> class_index;
  for (const auto& [label, n] : counts) {
    class_index[label] = static_cast<int>(s.classes.size());
    s.classes.push_back(label);
    s.prior.push_back(static_cast<double>(n) / static_cast<double>(train.size()));
  }

  s.vectorizer = features::TfidfVectorizer(config.features);
  s.vectorizer.fit(texts);
  std::vector<features::SparseVector> rows;
  rows.reserve(texts.size());
  for (const auto& t : texts) rows.push_back(s.vectorizer.transform(t));
  s.reducer.fit(rows, s.vectorizer.vocabulary_size(), config.features.reduced_dimension,
                config.features.seed);

  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(s.reducer.dimension()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = s.reducer.transform(rows[i]).transpose();
  }
  std::vector<int> y;
  for (const auto& c : train) y.push_back(class_index.at(*c.category));
  const std::size_t k = s.classes.size();

  switch (kind) {
    case BaselineKind::GradientBoostedTrees: {
      learn::GradientBoostedTrees m;
      m.params = config.gbt;
      m.fit(x, y, k);
      s.learner = std::move(m);
      break;
    }
    case BaselineKind::RandomForest: {
      learn::RandomForest m;
      m.params = config.forest;
      m.fit(x, y, k);
      s.learner = std::move(m);
      break;
    }
    case BaselineKind::AdaptiveBoosting: {
      learn::AdaBoost m;
      m.params = config.ada;
      m.fit(x, y, k);
      s.learner = std::move(m);
      break;
    }
    case BaselineKind::KNearestNeighbors: {
      learn::KNearestNeighbors m;
      m.k = config.knn_k;
      m.fit(x, y, k);
      s.learner = std::move(m);
      break;
    }
  }
  return std::make_unique<BaselineModel>(std::move(s));
}

}  // namespace base
}  // namespace triage
