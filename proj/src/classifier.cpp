#include "triage/classifier.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "triage/errors.hpp"
#include "triage/evaluator.hpp"
#include "triage/hashing.hpp"
#include "triage/rng.hpp"

namespace triage::clf {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kCheckpointFormat = 1;

std::string pooling_name(nn::Pooling p) { return p == nn::Pooling::Cls ? "cls" : "mean"; }

nn::Pooling parse_pooling(std::string_view s) {
  if (s == "cls") return nn::Pooling::Cls;
  if (s == "mean") return nn::Pooling::Mean;
  throw ConfigError("unknown pooling: " + std::string(s));
}

std::string schedule_name(LrSchedule s) {
  return s == LrSchedule::Constant ? "constant" : "linear_warmup_decay";
}

LrSchedule parse_schedule(std::string_view s) {
  if (s == "constant") return LrSchedule::Constant;
  if (s == "linear_warmup_decay") return LrSchedule::LinearWarmupDecay;
  throw ConfigError("unknown learning-rate schedule: " + std::string(s));
}

json labels_json(const std::vector<CategoryLabel>& labels) {
  json j = json::array();
  for (auto l : labels) j.push_back(std::string(to_string(l)));
  return j;
}

std::vector<CategoryLabel> labels_from_json(const json& j) {
  std::vector<CategoryLabel> out;
  for (const auto& s : j) out.push_back(require_category(s.get<std::string>()));
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("missing artifact: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << bytes;
}

std::string model_fingerprint(const std::string& weights_sha, const std::string& vocab_sha,
                              const json& spec, const json& encoder, const json& config,
                              const json& label_order, const std::string& training_fp) {
  Sha256 h;
  h.field("transformer")
      .field(weights_sha)
      .field(vocab_sha)
      .field(spec.dump())
      .field(encoder.dump())
      .field(config.dump())
      .field(label_order.dump())
      .field(training_fp);
  return h.hex();
}

bool all_finite(const nn::Params& params) {
  for (const auto& p : params) {
    if (!p.allFinite()) return false;
  }
  return true;
}

double cross_entropy(const Eigen::VectorXd& z, std::size_t label) {
  const double mx = z.maxCoeff();
  return -(z(static_cast<Eigen::Index>(label)) - mx - std::log((z.array() - mx).exp().sum()));
}

}  // namespace

std::string_view to_string(StopMetric m) {
  return m == StopMetric::ValidationF1 ? "validation_f1" : "validation_accuracy";
}

StopMetric parse_stop_metric(std::string_view s) {
  if (s == "validation_f1") return StopMetric::ValidationF1;
  if (s == "validation_accuracy") return StopMetric::ValidationAccuracy;
  throw ConfigError("unknown early-stopping metric: " + std::string(s));
}

void ModelSpec::validate() const {
  if (model_id.empty()) throw ConfigError("model spec needs a model_id");
  if (max_sequence_length != 128 && max_sequence_length != 256) {
    throw ConfigError(fmt::format("max_sequence_length must be 128 or 256, got {}",
                                  max_sequence_length));
  }
  if (num_labels != kNumCategories) {
    throw ConfigError(fmt::format("num_labels must be {}, got {}", kNumCategories, num_labels));
  }
  if (d_model == 0 || heads == 0 || d_model % heads != 0 || ffn == 0 || layers == 0) {
    throw ConfigError("bad encoder dimensions in model spec");
  }
}

json ModelSpec::to_json() const {
  return {{"model_id", model_id},
          {"encoder_id", encoder_id},
          {"max_sequence_length", max_sequence_length},
          {"num_labels", num_labels},
          {"lowercase", tokenizer.lowercase},
          {"hinglish_normalize", tokenizer.hinglish_normalize},
          {"d_model", d_model},
          {"heads", heads},
          {"ffn", ffn},
          {"layers", layers},
          {"pooling", pooling_name(pooling)},
          {"pretrained_dir", pretrained_dir}};
}

ModelSpec ModelSpec::from_json(const json& j) {
  // A bare registry name, optionally with overrides.
  ModelSpec s = j.contains("model_id") ? registry_spec(j.at("model_id").get<std::string>())
                                       : ModelSpec{};
  s.encoder_id = j.value("encoder_id", s.encoder_id);
  s.max_sequence_length = j.value("max_sequence_length", s.max_sequence_length);
  s.num_labels = j.value("num_labels", s.num_labels);
  s.tokenizer.lowercase = j.value("lowercase", s.tokenizer.lowercase);
  s.tokenizer.hinglish_normalize = j.value("hinglish_normalize", s.tokenizer.hinglish_normalize);
  s.d_model = j.value("d_model", s.d_model);
  s.heads = j.value("heads", s.heads);
  s.ffn = j.value("ffn", s.ffn);
  s.layers = j.value("layers", s.layers);
  if (j.contains("pooling")) s.pooling = parse_pooling(j.at("pooling").get<std::string>());
  s.pretrained_dir = j.value("pretrained_dir", s.pretrained_dir);
  s.validate();
  return s;
}

const std::vector<ModelSpec>& registry() {
  static const std::vector<ModelSpec> kRegistry = [] {
    auto make = [](std::string id, std::string encoder, bool lowercase, bool hinglish) {
      ModelSpec s;
      s.model_id = std::move(id);
      s.encoder_id = std::move(encoder);
      s.tokenizer.lowercase = lowercase;
      s.tokenizer.hinglish_normalize = hinglish;
      return s;
    };
    return std::vector<ModelSpec>{
        make("bert", "compact-bert-uncased", true, false),
        make("roberta", "compact-roberta-cased", false, false),
        make("hingbert", "compact-hingbert-uncased", true, true),
        make("hingroberta", "compact-hingroberta-cased", false, true),
    };
  }();
  return kRegistry;
}

ModelSpec registry_spec(std::string_view name) {
  for (const auto& s : registry()) {
    if (s.model_id == name) return s;
  }
  throw ConfigError("unknown model: " + std::string(name) +
                    " (known: bert, roberta, hingbert, hingroberta)");
}

void TrainingConfig::validate(bool pretrained) const {
  const double hi = pretrained ? 3e-5 : 1e-2;
  if (!(learning_rate >= 1e-5 && learning_rate <= hi)) {
    throw ConfigError(fmt::format("learning_rate {} outside [1e-05, {}]", learning_rate, hi));
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(weight_decay >= 0)) throw ConfigError("weight_decay must be >= 0");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (patience == 0) throw ConfigError("patience must be positive");
  if (!(warmup_ratio >= 0 && warmup_ratio < 1)) throw ConfigError("warmup_ratio must be in [0,1)");
  if (vocab_max_size < 16) throw ConfigError("vocab_max_size too small");
}

json TrainingConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"weight_decay", weight_decay},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"early_stopping_metric", std::string(clf::to_string(metric))},
          {"schedule", schedule_name(schedule)},
          {"warmup_ratio", warmup_ratio},
          {"seed", seed},
          {"vocab_max_size", vocab_max_size}};
}

TrainingConfig TrainingConfig::from_json(const json& j) {
  static const std::set<std::string> kKnown = {
      "learning_rate", "batch_size", "weight_decay", "max_epochs",   "patience",
      "early_stopping_metric",     "schedule",   "warmup_ratio", "seed", "vocab_max_size"};
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (!kKnown.contains(k)) throw ConfigError("unknown training option: " + k);
  }
  TrainingConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  if (j.contains("early_stopping_metric")) {
    c.metric = parse_stop_metric(j.at("early_stopping_metric").get<std::string>());
  }
  if (j.contains("schedule")) c.schedule = parse_schedule(j.at("schedule").get<std::string>());
  c.warmup_ratio = j.value("warmup_ratio", c.warmup_ratio);
  c.seed = j.value("seed", c.seed);
  c.vocab_max_size = j.value("vocab_max_size", c.vocab_max_size);
  return c;
}

json TrainingHistory::to_json() const {
  json epochs_j = json::array();
  for (const auto& e : epochs) {
    epochs_j.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"metric", e.metric},
                        {"validation_accuracy", e.validation_accuracy},
                        {"validation_macro_f1", e.validation_macro_f1},
                        {"seconds", e.seconds}});
  }
  return {{"initial_train_loss", initial_train_loss},
          {"epochs", epochs_j},
          {"best_epoch", best_epoch},
          {"best_metric", best_metric},
          {"stopped_early", stopped_early}};
}

TrainingHistory TrainingHistory::from_json(const json& j) {
  TrainingHistory h;
  h.initial_train_loss = j.at("initial_train_loss");
  for (const auto& e : j.at("epochs")) {
    h.epochs.push_back({e.at("epoch"), e.at("train_loss"), e.at("metric"),
                        e.at("validation_accuracy"), e.at("validation_macro_f1"),
                        e.at("seconds")});
  }
  h.best_epoch = j.at("best_epoch");
  h.best_metric = j.at("best_metric");
  h.stopped_early = j.at("stopped_early");
  return h;
}

StopOutcome run_epochs(std::size_t max_epochs, std::size_t patience,
                       const std::function<double(std::size_t)>& run_epoch,
                       const std::function<void(std::size_t)>& on_improve) {
  StopOutcome out;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= max_epochs; ++epoch) {
    const double metric = run_epoch(epoch);
    out.epochs_run = epoch;
    if (std::isfinite(metric) && (out.best_epoch == 0 || metric > out.best_metric)) {
      out.best_epoch = epoch;
      out.best_metric = metric;
      since_best = 0;
      if (on_improve) on_improve(epoch);
    } else if (++since_best >= patience) {
      out.stopped_early = epoch < max_epochs;
      break;
    }
  }
  return out;
}

TransformerClassifier::TransformerClassifier(ModelSpec spec, TrainingConfig config,
                                             tok::WordPieceTokenizer tokenizer,
                                             nn::TransformerEncoder encoder,
                                             std::vector<CategoryLabel> label_order,
                                             std::string training_fingerprint,
                                             TrainingHistory history)
    : spec_(std::move(spec)),
      config_(config),
      tokenizer_(std::move(tokenizer)),
      encoder_(std::move(encoder)),
      label_order_(std::move(label_order)),
      training_fingerprint_(std::move(training_fingerprint)),
      history_(std::move(history)) {
  if (label_order_.size() != encoder_.config().num_labels) {
    throw IntegrityError("label order does not match the classification head");
  }
  std::ostringstream vocab_bytes;
  for (const auto& t : tokenizer_.vocab().tokens()) vocab_bytes << t << '\n';
  weights_sha_ = sha256_hex(encoder_.serialize());
  fingerprint_ = model_fingerprint(weights_sha_, sha256_hex(vocab_bytes.str()), spec_.to_json(),
                                   encoder_.config().to_json(), config_.to_json(),
                                   labels_json(label_order_), training_fingerprint_);
}

std::vector<int> TransformerClassifier::ids(std::string_view text) const {
  const auto e = tokenizer_.encode(text, spec_.max_sequence_length);
  return {e.ids.begin(), e.ids.begin() + static_cast<std::ptrdiff_t>(e.length)};
}

Eigen::VectorXd TransformerClassifier::logits(std::string_view text) const {
  return encoder_.logits(ids(text));
}

nn::Matrix TransformerClassifier::token_states(std::string_view text) const {
  return encoder_.hidden(ids(text));
}

PredictionResult TransformerClassifier::predict(std::string_view text) const {
  const Eigen::VectorXd z = logits(text);
  return make_prediction(label_order_, softmax({z.data(), z.data() + z.size()}), fingerprint_);
}

std::vector<PredictionResult> TransformerClassifier::predict_batch(
    const std::vector<std::string>& texts) const {
  std::vector<PredictionResult> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(predict(t));
  return out;
}

void TransformerClassifier::save(const fs::path& dir) const {
  fs::create_directories(dir);
  const std::string blob = encoder_.serialize();
  write_file(dir / "weights.bin", blob);
  tokenizer_.vocab().save(dir / "vocab.txt");
  const std::string vocab_sha = sha256_file(dir / "vocab.txt");
  json meta = {{"format_version", kCheckpointFormat},
               {"kind", kind()},
               {"model_id", spec_.model_id},
               {"spec", spec_.to_json()},
               {"encoder", encoder_.config().to_json()},
               {"training_config", config_.to_json()},
               {"label_order", labels_json(label_order_)},
               {"training_fingerprint", training_fingerprint_},
               {"weights_sha256", weights_sha_},
               {"vocab_sha256", vocab_sha},
               {"fingerprint", fingerprint_}};
  write_file(dir / "metadata.json", meta.dump(2) + "\n");
  write_file(dir / "history.json", history_.to_json().dump(2) + "\n");
}

std::unique_ptr<TransformerClassifier> TransformerClassifier::load(const fs::path& dir) {
  for (const char* name : {"metadata.json", "weights.bin", "vocab.txt"}) {
    if (!fs::exists(dir / name)) {
      throw MissingArtifactError("checkpoint " + dir.string() + " is missing " + name);
    }
  }
  json meta;
  try {
    meta = json::parse(read_file(dir / "metadata.json"));
  } catch (const json::exception& e) {
    throw IntegrityError("checkpoint metadata is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (meta.at("kind") != "transformer") throw IntegrityError("checkpoint is not a transformer");
    const std::string blob = read_file(dir / "weights.bin");
    const std::string weights_sha = sha256_hex(blob);
    if (weights_sha != meta.at("weights_sha256").get<std::string>()) {
      throw IntegrityError("weights do not match the fingerprint recorded in metadata");
    }
    const std::string vocab_sha = sha256_file(dir / "vocab.txt");
    if (vocab_sha != meta.at("vocab_sha256").get<std::string>()) {
      throw IntegrityError("vocabulary does not match the fingerprint recorded in metadata");
    }
    const std::string expected = model_fingerprint(
        weights_sha, vocab_sha, meta.at("spec"), meta.at("encoder"), meta.at("training_config"),
        meta.at("label_order"), meta.at("training_fingerprint").get<std::string>());
    if (expected != meta.at("fingerprint").get<std::string>()) {
      throw IntegrityError("checkpoint metadata does not match its fingerprint");
    }
    ModelSpec spec = ModelSpec::from_json(meta.at("spec"));
    const auto enc_cfg = nn::EncoderConfig::from_json(meta.at("encoder"));
    TrainingHistory history;
    if (fs::exists(dir / "history.json")) {
      history = TrainingHistory::from_json(json::parse(read_file(dir / "history.json")));
    }
    auto model = std::make_unique<TransformerClassifier>(
        spec, TrainingConfig::from_json(meta.at("training_config")),
        tok::WordPieceTokenizer(tok::Vocab::load(dir / "vocab.txt"), spec.tokenizer),
        nn::TransformerEncoder(enc_cfg, nn::TransformerEncoder::deserialize(blob)),
        labels_from_json(meta.at("label_order")), meta.at("training_fingerprint"),
        std::move(history));
    if (model->fingerprint() != meta.at("fingerprint").get<std::string>()) {
      throw IntegrityError("reconstructed model does not match its fingerprint");
    }
    return model;
  } catch (const json::exception& e) {
    throw IntegrityError("checkpoint metadata is malformed: " + std::string(e.what()));
  } catch (const ConfigError& e) {
    throw IntegrityError("checkpoint metadata is malformed: " + std::string(e.what()));
  } catch (const UnknownLabelError& e) {
    throw IntegrityError("checkpoint label order is malformed: " + std::string(e.what()));
  }
}

TrainResult train(const corpus::DatasetSplit& split, const ModelSpec& spec,
                  const TrainingConfig& config, const TrainOptions& options) {
  spec.validate();
  config.validate(spec.pretrained());
  if (split.train.empty()) throw PreconditionError("training partition is empty");
  if (split.validation.empty()) throw PreconditionError("validation partition is empty");

  const auto& order = options.label_order;
  if (order.size() != spec.num_labels) {
    throw ConfigError(fmt::format("label order has {} entries, model expects {}", order.size(),
                                  spec.num_labels));
  }
  std::map<CategoryLabel, std::size_t> head_index;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (!head_index.emplace(order[i], i).second) {
      throw ConfigError("label order lists " + std::string(to_string(order[i])) + " twice");
    }
  }
  std::set<CategoryLabel> train_classes, val_classes;
  for (const auto& c : split.train) {
    if (!c.category) throw PreconditionError("training complaint " + c.id + " has no category");
    if (!head_index.contains(*c.category)) {
      throw ConfigError("training class " + std::string(to_string(*c.category)) +
                        " is absent from the label order");
    }
    train_classes.insert(*c.category);
  }
  for (const auto& c : split.validation) {
    if (!c.category) throw PreconditionError("validation complaint " + c.id + " has no category");
    val_classes.insert(*c.category);
  }
  for (auto c : train_classes) {
    if (!val_classes.contains(c)) {
      throw PreconditionError("validation has no sample of training class " +
                              std::string(to_string(c)));
    }
  }

  // Tokenizer and encoder: from a pretrained checkpoint or fresh.
  std::optional<tok::WordPieceTokenizer> tokenizer;
  std::optional<nn::TransformerEncoder> encoder;
  if (spec.pretrained()) {
    const auto base = TransformerClassifier::load(spec.pretrained_dir);
    tokenizer.emplace(base->tokenizer().vocab(), spec.tokenizer);
    nn::EncoderConfig ec = base->encoder().config();
    if (ec.max_positions < spec.max_sequence_length) {
      throw ConfigError("pretrained encoder has fewer positions than max_sequence_length");
    }
    encoder.emplace(base->encoder());
    encoder->reset_head(order.size(), config.seed);
  } else {
    std::vector<std::string> texts;
    texts.reserve(split.train.size());
    for (const auto& c : split.train) texts.push_back(c.text);
    tokenizer.emplace(tok::build_vocab(texts, spec.tokenizer, {config.vocab_max_size, 1}),
                      spec.tokenizer);
    nn::EncoderConfig ec;
    ec.vocab_size = tokenizer->vocab().size();
    ec.max_positions = spec.max_sequence_length;
    ec.d_model = spec.d_model;
    ec.heads = spec.heads;
    ec.ffn = spec.ffn;
    ec.layers = spec.layers;
    ec.num_labels = order.size();
    ec.pooling = spec.pooling;
    encoder.emplace(ec, config.seed);
  }

  auto encode_all = [&](const Complaints& cs) {
    std::vector<std::vector<int>> seqs;
    std::vector<std::size_t> labels;
    for (const auto& c : cs) {
      const auto e = tokenizer->encode(c.text, spec.max_sequence_length);
      seqs.emplace_back(e.ids.begin(), e.ids.begin() + static_cast<std::ptrdiff_t>(e.length));
      labels.push_back(head_index.contains(*c.category) ? head_index.at(*c.category) : order.size());
    }
    return std::make_pair(std::move(seqs), std::move(labels));
  };
  const auto [train_x, train_y] = encode_all(split.train);
  const auto [val_x, val_y] = encode_all(split.validation);

  Sha256 fp;
  fp.field(spec.to_json().dump())
      .field(config.to_json().dump())
      .field(labels_json(order).dump())
      .field(corpus::data_hash(split.train))
      .field(corpus::data_hash(split.validation));
  const std::string training_fp = fp.hex();

  std::unique_ptr<nn::Optimizer> optimizer =
      options.optimizer ? options.optimizer(config, *encoder)
                        : std::make_unique<nn::AdamW>(nn::AdamWConfig{0.9, 0.999, 1e-8, config.weight_decay},
                                                      encoder->decay_mask());

  TrainingHistory history;
  {
    double loss = 0;
    for (std::size_t i = 0; i < train_x.size(); ++i) {
      loss += cross_entropy(encoder->logits(train_x[i]), train_y[i]);
    }
    history.initial_train_loss = loss / static_cast<double>(train_x.size());
  }

  const std::size_t n = train_x.size();
  const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.max_epochs;
  auto lr_at = [&](std::size_t step) {
    if (config.schedule == LrSchedule::Constant) return config.learning_rate;
    const auto warm = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.warmup_ratio * static_cast<double>(total_steps))));
    if (step < warm) return config.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warm);
    return config.learning_rate * static_cast<double>(total_steps - step) /
           static_cast<double>(std::max<std::size_t>(1, total_steps - warm));
  };

  Rng rng(config.seed ^ 0x5eedf00dULL);
  std::vector<std::size_t> index(n);
  for (std::size_t i = 0; i < n; ++i) index[i] = i;
  std::size_t step = 0;
  nn::Params best_params = encoder->params();

  auto run_epoch = [&](std::size_t epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(index);
    double epoch_loss = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const double w = 1.0 / static_cast<double>(end - start);
      auto grads = encoder->zero_like();
      double batch_loss = 0;
      for (std::size_t b = start; b < end; ++b) {
        batch_loss += encoder->accumulate_gradient(train_x[index[b]], train_y[index[b]], grads, w);
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingDiverged(fmt::format(
            "non-finite loss at epoch {}, step {} (learning_rate {}, batch_size {})", epoch, step,
            config.learning_rate, config.batch_size));
      }
      epoch_loss += batch_loss;
      optimizer->step(encoder->params(), grads, lr_at(step));
      ++step;
    }
    if (!all_finite(encoder->params())) {
      throw TrainingDiverged(fmt::format("non-finite weights after epoch {} (learning_rate {})",
                                         epoch, config.learning_rate));
    }
    std::vector<eval::LabeledPrediction> preds;
    preds.reserve(val_x.size());
    for (std::size_t i = 0; i < val_x.size(); ++i) {
      const Eigen::VectorXd z = encoder->logits(val_x[i]);
      const auto p = make_prediction(order, softmax({z.data(), z.data() + z.size()}), "");
      preds.push_back({*split.validation[i].category, p.label});
    }
    const auto report = eval::evaluate(preds, eval::Averaging::Macro);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(n);
    rec.validation_accuracy = report.macro.accuracy;
    rec.validation_macro_f1 = report.macro.f1;
    rec.metric = config.metric == StopMetric::ValidationF1 ? rec.validation_macro_f1
                                                           : rec.validation_accuracy;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.epochs.push_back(rec);
    spdlog::debug("epoch {} loss {:.4f} {} {:.4f}", epoch, rec.train_loss, to_string(config.metric),
                  rec.metric);
    if (options.on_epoch) options.on_epoch(rec);
    return rec.metric;
  };

  const auto outcome = run_epochs(config.max_epochs, config.patience, run_epoch,
                                  [&](std::size_t) { best_params = encoder->params(); });
  history.best_epoch = outcome.best_epoch;
  history.best_metric = outcome.best_metric;
  history.stopped_early = outcome.stopped_early;
  encoder->params() = std::move(best_params);

  TrainResult result;
  result.history = history;
  result.model = std::make_unique<TransformerClassifier>(spec, config, std::move(*tokenizer),
                                                         std::move(*encoder), order, training_fp,
                                                         std::move(history));
  return result;
}

json GridSpec::to_json() const {
  return {{"learning_rate", learning_rates},
          {"batch_size", batch_sizes},
          {"max_sequence_length", max_sequence_lengths},
          {"base", base.to_json()},
          {"workers", workers}};
}

GridSpec GridSpec::from_json(const json& j) {
  for (const auto& [k, v] : j.items()) {
    if (k != "learning_rate" && k != "batch_size" && k != "max_sequence_length" && k != "base" && k != "workers") {
      throw ConfigError("unknown grid option: " + k);
    }
  }
  GridSpec g;
  if (j.contains("learning_rate")) g.learning_rates = j.at("learning_rate").get<std::vector<double>>();
  if (j.contains("batch_size")) g.batch_sizes = j.at("batch_size").get<std::vector<std::size_t>>();
  if (j.contains("max_sequence_length")) {
    g.max_sequence_lengths = j.at("max_sequence_length").get<std::vector<std::size_t>>();
  }
  if (j.contains("base")) g.base = TrainingConfig::from_json(j.at("base"));
  g.workers = j.value("workers", g.workers);
  return g;
}

std::vector<GridPoint> grid_points(const GridSpec& grid, const ModelSpec& spec) {
  const std::vector<std::size_t> lengths = grid.max_sequence_lengths.empty()
                                               ? std::vector<std::size_t>{spec.max_sequence_length}
                                               : grid.max_sequence_lengths;
  if (grid.learning_rates.empty() || grid.batch_sizes.empty()) {
    throw ConfigError("grid axes must be non-empty");
  }
  std::vector<GridPoint> points;
  for (double lr : grid.learning_rates) {
    for (std::size_t b : grid.batch_sizes) {
      for (std::size_t len : lengths) points.push_back({lr, b, len});
    }
  }
  return points;
}

json GridSearchResult::to_json() const {
  json rows = json::array();
  for (const auto& r : results) {
    json row = {{"learning_rate", r.point.learning_rate},
                {"batch_size", r.point.batch_size},
                {"max_sequence_length", r.point.max_sequence_length},
                {"failed", r.failed}};
    if (r.failed) {
      row["error"] = r.error;
    } else {
      row["metric"] = r.metric;
      row["best_epoch"] = r.history.best_epoch;
      row["epochs_run"] = r.history.epochs.size();
    }
    rows.push_back(row);
  }
  return {{"results", rows},
          {"best_index", best_index},
          {"best_config", best_config.to_json()},
          {"best_spec", best_spec.to_json()}};
}

GridSearchResult grid_search(const corpus::DatasetSplit& split, const ModelSpec& spec,
                             const GridSpec& grid, const TrainOptions& options) {
  const auto points = grid_points(grid, spec);
  // Validate every point up front so configuration mistakes are not
  // mistaken for training failures.
  for (const auto& p : points) {
    TrainingConfig c = grid.base;
    c.learning_rate = p.learning_rate;
    c.batch_size = p.batch_size;
    c.validate(spec.pretrained());
    ModelSpec s = spec;
    s.max_sequence_length = p.max_sequence_length;
    s.validate();
  }
  GridSearchResult out;
  out.results.resize(points.size());
  std::vector<std::unique_ptr<TransformerClassifier>> models(points.size());

  auto run_point = [&](std::size_t i) {
    const auto& p = points[i];
    TrainingConfig c = grid.base;
    c.learning_rate = p.learning_rate;
    c.batch_size = p.batch_size;
    ModelSpec s = spec;
    s.max_sequence_length = p.max_sequence_length;
    GridResult& r = out.results[i];
    r.point = p;
    try {
      auto trained = train(split, s, c, options);
      r.history = trained.history;
      r.metric = trained.history.best_metric;
      models[i] = std::move(trained.model);
    } catch (const Error& e) {
      r.failed = true;
      r.error = e.what();
      spdlog::warn("grid point lr={} batch={} len={} failed: {}", p.learning_rate, p.batch_size,
                   p.max_sequence_length, e.what());
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(grid.workers, points.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < points.size(); ++i) run_point(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < points.size(); i = next++) run_point(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& r = out.results[i];
    if (r.failed) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = out.results[*best];
    const auto key = [](const GridResult& x) {
      return std::make_tuple(-x.metric, x.point.learning_rate, x.point.batch_size,
                             x.point.max_sequence_length);
    };
    if (key(r) < key(b)) best = i;
  }
  if (!best) throw Error("every grid point failed; first error: " + out.results.front().error);
  out.best_index = *best;
  out.best_config = grid.base;
  out.best_config.learning_rate = points[*best].learning_rate;
  out.best_config.batch_size = points[*best].batch_size;
  out.best_spec = spec;
  out.best_spec.max_sequence_length = points[*best].max_sequence_length;
  out.best_model = std::move(models[*best]);
  return out;
}

}  // namespace triage::clf
