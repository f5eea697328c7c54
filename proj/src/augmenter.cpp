#include "triage/augmenter.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <thread>

#include <fmt/args.h>
#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "triage/classifier.hpp"
#include "triage/errors.hpp"
#include "triage/text.hpp"
#include "triage/tokenizer.hpp"

namespace triage::aug {

using nlohmann::json;

// ---------------------------------------------------------------- generation

HttpGeneratorClient::HttpGeneratorClient(Options options) : options_(std::move(options)) {
  if (options_.retry.attempts == 0) throw ConfigError("retry.attempts must be >= 1");
  if (options_.parallelism == 0) throw ConfigError("parallelism must be >= 1");
}

std::vector<std::string> HttpGeneratorClient::generate(const std::string& prompt, std::size_t n) {
  if (n == 0) return {};
  json body = {{"model_id", options_.model_id},
               {"prompt", prompt},
               {"n", n},
               {"max_tokens", options_.max_tokens}};
  if (options_.seed) body["seed"] = *options_.seed;
  const std::string payload = body.dump();

  std::string last_error;
  auto backoff = options_.retry.backoff;
  for (std::size_t attempt = 0; attempt < options_.retry.attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client cli(options_.base_url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.retry.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
        options_.retry.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    auto res = cli.Post(options_.path, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    try {
      const auto j = json::parse(res->body);
      std::vector<std::string> out;
      for (const auto& c : j.at("completions")) out.push_back(c.get<std::string>());
      if (out.size() > n) out.resize(n);
      return out;
    } catch (const json::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
    }
  }
  throw GeneratorUnavailable("generator " + options_.base_url + options_.path + ": " + last_error);
}

std::string StubGenerator::variant(const std::vector<std::string>& words, std::size_t index) {
  std::vector<std::string> w = words;
  const std::size_t pairs = w.size() < 2 ? 0 : w.size() - 1;
  if (pairs == 0) return text::join(w, " ");
  const std::size_t p = index % pairs;
  std::swap(w[p], w[p + 1]);
  // a second, non-overlapping swap once the single swaps run out
  const std::size_t round = index / pairs;
  if (round > 0 && pairs >= 3) {
    const std::size_t q = (p + 2 + (round - 1)) % pairs;
    if (q + 1 < p || q > p + 1) std::swap(w[q], w[q + 1]);
  }
  return text::join(w, " ");
}

std::vector<std::string> StubGenerator::generate(const std::string& prompt, std::size_t n) {
  static constexpr std::string_view kMarker = "Complaint:";
  const auto pos = prompt.rfind(kMarker);
  const std::string source =
      text::trim(pos == std::string::npos ? std::string_view(prompt)
                                          : std::string_view(prompt).substr(pos + kMarker.size()));
  const auto words = text::split_whitespace(source);
  std::size_t start = 0;
  {
    std::lock_guard lock(mutex_);
    auto& c = calls_[source];
    start = c;
    c += n;
  }
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(fmt::format("{}. {}\n", k + 1, variant(words, start + k)));
  }
  return out;
}

std::string render_prompt(std::string_view tmpl, const Complaint& complaint, std::size_t n) {
  fmt::dynamic_format_arg_store<fmt::format_context> args;
  args.push_back(fmt::arg("n", n));
  args.push_back(fmt::arg("text", complaint.text));
  args.push_back(fmt::arg("category", complaint.category ? std::string(to_string(*complaint.category))
                                                         : std::string("unknown")));
  try {
    return fmt::vformat(tmpl, args);
  } catch (const fmt::format_error& e) {
    throw ConfigError(std::string("prompt template: ") + e.what());
  }
}

GenerationOutcome generate_candidates(const Complaint& complaint, std::size_t n,
                                      GeneratorClient& client, std::string_view prompt_template) {
  GenerationOutcome out;
  if (n == 0) return out;
  try {
    out.completions = client.generate(render_prompt(prompt_template, complaint, n), n);
    if (out.completions.size() > n) out.completions.resize(n);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
    spdlog::warn("generation failed for {}: {}", complaint.id, e.what());
  }
  return out;
}

// ------------------------------------------------------------------ cleanup

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

// Length of a leading list marker plus following blanks, 0 if none.
std::size_t marker_length(std::string_view s) {
  std::size_t i = 0;
  std::size_t end = 0;
  if (i < s.size() && s[i] == '(') {
    std::size_t j = i + 1;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i + 1 && j < s.size() && s[j] == ')') end = j + 1;
  } else if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
    std::size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j - i <= 3 && j < s.size() && (s[j] == '.' || s[j] == ')')) end = j + 1;
  } else if (i < s.size() && (s[i] == '-' || s[i] == '*')) {
    end = i + 1;
  } else if (s.substr(i, 3) == "\xE2\x80\xA2") {
    end = i + 3;
  }
  if (end == 0) return 0;
  if (end < s.size() && !is_space(s[end])) return 0;  // "1.5 lakh", "-ve"
  while (end < s.size() && is_space(s[end])) ++end;
  return end;
}

std::string strip_quotes(std::string s) {
  static const std::vector<std::string> kQuotes = {"\"", "'", "\xE2\x80\x9C", "\xE2\x80\x9D",
                                                   "\xE2\x80\x98", "\xE2\x80\x99"};
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    for (const auto& q : kQuotes) {
      if (text::starts_with(s, q)) {
        s.erase(0, q.size());
        changed = true;
      }
      if (text::ends_with(s, q)) {
        s.erase(s.size() - q.size());
        changed = true;
      }
    }
    s = text::trim(s);
  }
  return s;
}

std::size_t alnum_tokens(std::string_view s) {
  std::size_t n = 0;
  for (const auto& w : text::split_whitespace(s)) {
    if (std::any_of(w.begin(), w.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || (static_cast<unsigned char>(c) & 0x80);
        })) {
      ++n;
    }
  }
  return n;
}

}  // namespace

std::vector<std::string> cleanup(std::string_view raw, std::size_t min_tokens) {
  std::vector<std::string> segments;
  std::string current;
  auto flush = [&] {
    std::string s = strip_quotes(text::collapse_whitespace(current));
    current.clear();
    if (s.empty() || text::ends_with(s, ":")) return;
    if (alnum_tokens(s) < std::max<std::size_t>(min_tokens, 1)) return;
    segments.push_back(std::move(s));
  };

  std::size_t pos = 0;
  while (pos <= raw.size()) {
    const auto nl = raw.find('\n', pos);
    std::string_view line = raw.substr(pos, nl == std::string_view::npos ? raw.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? raw.size() + 1 : nl + 1;

    const std::string trimmed = text::trim(line);
    if (trimmed.empty()) {
      flush();
      continue;
    }
    if (const auto m = marker_length(trimmed); m > 0) {
      flush();
      current = trimmed.substr(m);
      continue;
    }
    if (!current.empty()) current += ' ';
    current += trimmed;
    if (text::ends_with(trimmed, ":")) flush();
  }
  flush();
  return segments;
}

// ---------------------------------------------------------------- encoders

Eigen::RowVectorXd TokenEncoder::embed_sentence(std::string_view text) const {
  const Eigen::MatrixXd m = embed_tokens(text);
  if (m.rows() == 0) throw EncoderError("no tokens to embed");
  return m.colwise().mean();
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t salt) {
  std::uint64_t h = 1469598103934665603ull ^ salt;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<std::string> similarity_tokens(std::string_view text) {
  return tok::pre_tokenize(text, tok::TokenizerOptions{.lowercase = true, .hinglish_normalize = false});
}

}  // namespace

Eigen::MatrixXd HashedNgramEncoder::embed_tokens(std::string_view text) const {
  const auto tokens = similarity_tokens(text);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tokens.size()),
                                              static_cast<Eigen::Index>(dim_));
  for (std::size_t r = 0; r < tokens.size(); ++r) {
    const std::string padded = "<" + tokens[r] + ">";
    auto add = [&](std::string_view piece, double weight) {
      const auto h = fnv1a(piece, 0x9e3779b97f4a7c15ull);
      const auto col = static_cast<Eigen::Index>(h % dim_);
      out(static_cast<Eigen::Index>(r), col) += ((h >> 63) ? -1.0 : 1.0) * weight;
    };
    add(padded, 2.0);
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) add(std::string_view(padded).substr(i, 3), 1.0);
    const double norm = out.row(static_cast<Eigen::Index>(r)).norm();
    if (norm > 0) out.row(static_cast<Eigen::Index>(r)) /= norm;
  }
  return out;
}

Eigen::MatrixXd StubEncoder::embed_tokens(std::string_view text) const {
  const auto words = text::split_whitespace(text);
  if (words.empty()) return {};
  const auto dim = table_.empty() ? 0 : table_.begin()->second.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(words.size()), dim);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto it = table_.find(words[i]);
    if (it == table_.end()) throw EncoderError("stub encoder has no vector for \"" + words[i] + "\"");
    if (it->second.size() != dim) throw EncoderError("stub encoder vectors differ in size");
    out.row(static_cast<Eigen::Index>(i)) = it->second;
  }
  return out;
}

CheckpointEncoder::CheckpointEncoder(const std::filesystem::path& dir)
    : model_(clf::TransformerClassifier::load(dir)) {
  id_ = "checkpoint:" + model_->fingerprint().substr(0, 16);
}

CheckpointEncoder::~CheckpointEncoder() = default;

Eigen::MatrixXd CheckpointEncoder::embed_tokens(std::string_view text) const {
  try {
    const nn::Matrix h = model_->token_states(text);
    if (h.rows() <= 2) return Eigen::MatrixXd(0, h.cols());
    return h.middleRows(1, h.rows() - 2);
  } catch (const PreconditionError&) {
    throw;
  } catch (const std::exception& e) {
    throw EncoderError(std::string("checkpoint encoder: ") + e.what());
  }
}

std::shared_ptr<TokenEncoder> make_encoder(std::string_view backend) {
  if (backend.empty() || backend == "hashed-ngram") return std::make_shared<HashedNgramEncoder>();
  static constexpr std::string_view kCheckpoint = "checkpoint:";
  if (text::starts_with(backend, kCheckpoint)) {
    return std::make_shared<CheckpointEncoder>(std::string(backend.substr(kCheckpoint.size())));
  }
  throw ConfigError("unknown embedding backend: " + std::string(backend));
}

// --------------------------------------------------------------- similarity

std::string_view to_string(SimilarityMode m) {
  return m == SimilarityMode::TokenGreedyF1 ? "token_greedy_f1" : "sentence_cosine";
}

SimilarityMode parse_mode(std::string_view s) {
  if (s == "token_greedy_f1") return SimilarityMode::TokenGreedyF1;
  if (s == "sentence_cosine") return SimilarityMode::SentenceCosine;
  throw ConfigError("unknown similarity mode: " + std::string(s));
}

namespace {

Eigen::MatrixXd row_normalized(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double n = out.row(r).norm();
    if (n > 0) out.row(r) /= n;
  }
  return out;
}

}  // namespace

GreedyScore greedy_f1(const Eigen::MatrixXd& source, const Eigen::MatrixXd& candidate) {
  if (source.rows() == 0 || candidate.rows() == 0) {
    throw PreconditionError("greedy_f1 needs at least one token on each side");
  }
  if (source.cols() != candidate.cols()) throw EncoderError("embedding widths differ");
  // cos(i, j): source token i against candidate token j
  const Eigen::MatrixXd cos = row_normalized(source) * row_normalized(candidate).transpose();
  GreedyScore s;
  s.precision = cos.colwise().maxCoeff().mean();
  s.recall = cos.rowwise().maxCoeff().mean();
  s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

void SimilarityGateConfig::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0, 1]");
}

SimilarityGateConfig SimilarityGateConfig::from_json(const json& j) {
  SimilarityGateConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "theta") c.theta = v.get<double>();
    else if (k == "mode") c.mode = parse_mode(v.get<std::string>());
    else if (k == "embedding_backend") c.embedding_backend = v.get<std::string>();
    else throw ConfigError("unknown gate key: " + k);
  }
  c.validate();
  return c;
}

json SimilarityGateConfig::to_json() const {
  return {{"theta", theta}, {"mode", to_string(mode)}, {"embedding_backend", embedding_backend}};
}

double similarity(std::string_view source, std::string_view candidate,
                  const SimilarityGateConfig& config, const TokenEncoder& encoder) {
  if (text::is_blank(source) || text::is_blank(candidate)) {
    throw PreconditionError("similarity needs two non-empty strings");
  }
  double s = 0.0;
  if (config.mode == SimilarityMode::TokenGreedyF1) {
    const Eigen::MatrixXd a = encoder.embed_tokens(source);
    const Eigen::MatrixXd b = encoder.embed_tokens(candidate);
    if (a.rows() == 0 || b.rows() == 0) throw EncoderError("encoder produced no tokens");
    s = greedy_f1(a, b).f1;
  } else {
    const Eigen::RowVectorXd a = encoder.embed_sentence(source);
    const Eigen::RowVectorXd b = encoder.embed_sentence(candidate);
    const double d = a.norm() * b.norm();
    s = d > 0 ? a.dot(b) / d : 0.0;
  }
  if (!std::isfinite(s)) throw EncoderError("non-finite similarity");
  return std::clamp(s, 0.0, 1.0);
}

// --------------------------------------------------------------------- gate

std::string_view to_string(RejectionReason r) {
  switch (r) {
    case RejectionReason::BelowThreshold: return "below_threshold";
    case RejectionReason::EmptyAfterCleanup: return "empty_after_cleanup";
    case RejectionReason::DuplicateOfExisting: return "duplicate_of_existing";
  }
  return "?";
}

json AugmentationCandidate::to_json() const {
  json j = {{"parent_id", parent_id},
            {"generated_text", generated_text},
            {"similarity", similarity},
            {"accepted", accepted}};
  if (rejection_reason) j["rejection_reason"] = to_string(*rejection_reason);
  return j;
}

GateResult gate(std::vector<AugmentationCandidate> candidates, const SimilarityGateConfig& config,
                std::unordered_set<std::string>& existing) {
  config.validate();
  GateResult out;
  for (auto& c : candidates) {
    c.accepted = false;
    c.rejection_reason.reset();
    if (text::is_blank(c.generated_text)) {
      c.rejection_reason = RejectionReason::EmptyAfterCleanup;
    } else if (!(c.similarity >= config.theta)) {
      c.rejection_reason = RejectionReason::BelowThreshold;
    } else if (!existing.insert(text::normalized_key(c.generated_text)).second) {
      c.rejection_reason = RejectionReason::DuplicateOfExisting;
    } else {
      c.accepted = true;
    }
    (c.accepted ? out.accepted : out.rejected).push_back(std::move(c));
  }
  return out;
}

GateResult gate(std::vector<AugmentationCandidate> candidates, const SimilarityGateConfig& config) {
  std::unordered_set<std::string> none;
  return gate(std::move(candidates), config, none);
}

// ------------------------------------------------------------------ targets

ClassCounts count_classes(const Complaints& complaints) {
  ClassCounts out;
  for (const auto& c : complaints) {
    if (!c.category) throw PreconditionError("complaint " + c.id + " has no category");
    ++out[*c.category];
  }
  return out;
}

std::size_t TargetDistribution::target_for(CategoryLabel c, std::size_t base) const {
  const auto it = targets.find(c);
  return it == targets.end() ? base : it->second;
}

void TargetDistribution::validate(const ClassCounts& base) const {
  for (const auto& [c, n] : base) {
    const auto t = target_for(c, n);
    if (t < n) {
      throw ConfigError(fmt::format("target for {} ({}) is below its base count ({})", to_string(c), t, n));
    }
  }
}

TargetDistribution TargetDistribution::from_json(const json& j) {
  if (!j.is_object() || !j.contains("targets") || !j.at("targets").is_object()) {
    throw ConfigError("target file needs a \"targets\" object");
  }
  TargetDistribution d;
  for (const auto& [name, v] : j.at("targets").items()) {
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
      throw ConfigError("target for " + name + " must be a positive integer");
    }
    d.targets[require_category(name)] = v.get<std::size_t>();
  }
  return d;
}

TargetDistribution TargetDistribution::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open target file " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("target file " + path.string() + ": " + e.what());
  }
}

json TargetDistribution::to_json() const {
  json t = json::object();
  for (const auto& [c, n] : targets) t[std::string(to_string(c))] = n;
  return {{"targets", t}};
}

TargetDistribution TargetDistribution::from_multiplier(const ClassCounts& base, double multiplier,
                                                       std::size_t cap) {
  if (!(multiplier >= 1.0) || !std::isfinite(multiplier)) throw ConfigError("multiplier must be >= 1");
  TargetDistribution d;
  for (const auto& [c, n] : base) {
    const auto scaled = static_cast<std::size_t>(std::llround(static_cast<double>(n) * multiplier));
    d.targets[c] = std::max(n, std::min(scaled, cap));
  }
  return d;
}

// ------------------------------------------------------------------- corpus

AugmentConfig AugmentConfig::from_json(const json& j) {
  AugmentConfig c;
  for (const auto& [k, v] : j.items()) {
    if (k == "gate") c.gate = SimilarityGateConfig::from_json(v);
    else if (k == "prompt_template") c.prompt_template = v.get<std::string>();
    else if (k == "candidates_per_call") c.candidates_per_call = v.get<std::size_t>();
    else if (k == "budget_factor") c.budget_factor = v.get<double>();
    else if (k == "min_tokens") c.min_tokens = v.get<std::size_t>();
    else if (k == "reanonymize") c.reanonymize = v.get<bool>();
    else if (k == "anonymizer") c.anonymizer = anon::AnonymizerConfig::from_json(v);
    else if (k == "id_prefix") c.id_prefix = v.get<std::string>();
    else throw ConfigError("unknown augment key: " + k);
  }
  if (c.candidates_per_call == 0) throw ConfigError("candidates_per_call must be >= 1");
  if (!(c.budget_factor >= 0.0)) throw ConfigError("budget_factor must be >= 0");
  return c;
}

json AugmentConfig::to_json() const {
  return {{"gate", gate.to_json()},
          {"prompt_template", prompt_template},
          {"candidates_per_call", candidates_per_call},
          {"budget_factor", budget_factor},
          {"min_tokens", min_tokens},
          {"reanonymize", reanonymize},
          {"anonymizer", anonymizer.to_json()},
          {"id_prefix", id_prefix}};
}

json AugmentationReport::to_json() const {
  json out = json::object();
  for (const auto& [c, r] : classes) {
    json reasons = json::object();
    for (auto reason : {RejectionReason::BelowThreshold, RejectionReason::EmptyAfterCleanup,
                        RejectionReason::DuplicateOfExisting}) {
      const auto it = r.rejected_by_reason.find(reason);
      reasons[std::string(aug::to_string(reason))] = it == r.rejected_by_reason.end() ? 0 : it->second;
    }
    json e = {{"base", r.base},
              {"target", r.target},
              {"final", r.final_count()},
              {"attempted", r.attempted},
              {"candidates", r.candidates},
              {"accepted", r.accepted},
              {"rejected_by_reason", reasons},
              {"generation_failures", r.generation_failures}};
    if (r.warning) e["warning"] = *r.warning;
    out[std::string(triage::to_string(c))] = std::move(e);
  }
  return out;
}

json AugmentationReport::run_metadata() const {
  return {{"model_id", model_id},
          {"encoder", encoder_id},
          {"prompt_template", prompt_template},
          {"gate", gate.to_json()}};
}

namespace {

struct Insertion {
  Complaints& additions;
  std::unordered_set<std::string>& ids;
  const std::string& prefix;
  std::size_t next = 1;

  std::string fresh_id() {
    for (;;) {
      std::string id = fmt::format("{}{:06d}", prefix, next++);
      if (ids.insert(id).second) return id;
    }
  }
};

}  // namespace

AugmentResult augment_corpus(const corpus::DatasetSplit& split, const TargetDistribution& targets,
                             GeneratorClient& client, const AugmentConfig& config,
                             const TokenEncoder& encoder) {
  config.gate.validate();
  const ClassCounts base = count_classes(split.train);
  targets.validate(base);

  AugmentResult result;
  auto& report = result.report;
  report.model_id = client.model_id();
  report.encoder_id = encoder.id();
  report.prompt_template = config.prompt_template;
  report.gate = config.gate;
  spdlog::info("augment: generator={} encoder={} theta={} mode={}", report.model_id, report.encoder_id,
               config.gate.theta, to_string(config.gate.mode));
  spdlog::info("augment: prompt template: {}", config.prompt_template);

  std::unordered_set<std::string> existing;
  std::unordered_set<std::string> ids;
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (const auto& c : *part) {
      existing.insert(text::normalized_key(c.text));
      ids.insert(c.id);
    }
  }

  std::unique_ptr<anon::Redactor> redactor;
  if (config.reanonymize) {
    redactor = std::make_unique<anon::Redactor>(make_recognizer_factory(config.anonymizer)(),
                                                config.anonymizer.on_recognizer_failure);
  }

  Insertion insert{result.additions, ids, config.id_prefix};
  const std::size_t parallel = std::max<std::size_t>(1, client.max_parallelism());

  for (const auto category : all_categories()) {
    const auto bit = base.find(category);
    const std::size_t n_base = bit == base.end() ? 0 : bit->second;
    const std::size_t n_target = targets.target_for(category, n_base);
    if (n_base == 0 && n_target == 0) continue;
    ClassReport& cr = report.classes[category];
    cr.base = n_base;
    cr.target = n_target;
    if (n_target == n_base) continue;

    std::vector<const Complaint*> parents;
    for (const auto& c : split.train) {
      if (c.category == category && c.source == Source::Original) parents.push_back(&c);
    }
    std::sort(parents.begin(), parents.end(), [](auto* a, auto* b) { return a->id < b->id; });
    if (parents.empty()) {
      cr.warning = "no original training complaints to paraphrase";
      spdlog::warn("augment: {}: {}", to_string(category), *cr.warning);
      continue;
    }

    const auto budget = static_cast<std::size_t>(
        std::ceil(config.budget_factor * static_cast<double>(n_target - n_base)));
    std::size_t cursor = 0;

    while (cr.final_count() < n_target && cr.attempted < budget) {
      // one round of concurrent generation, consumed in parent order
      std::vector<std::pair<const Complaint*, std::size_t>> round;
      std::size_t planned = cr.attempted;
      while (round.size() < parallel && planned < budget) {
        const std::size_t n = std::min(config.candidates_per_call, budget - planned);
        round.emplace_back(parents[cursor++ % parents.size()], n);
        planned += n;
      }
      std::vector<GenerationOutcome> outcomes(round.size());
      if (round.size() == 1) {
        outcomes[0] = generate_candidates(*round[0].first, round[0].second, client, config.prompt_template);
      } else {
        std::vector<std::future<GenerationOutcome>> futures;
        for (const auto& [parent, n] : round) {
          futures.push_back(std::async(std::launch::async, [&, parent = parent, n = n] {
            return generate_candidates(*parent, n, client, config.prompt_template);
          }));
        }
        for (std::size_t i = 0; i < futures.size(); ++i) outcomes[i] = futures[i].get();
      }

      for (std::size_t i = 0; i < round.size() && cr.final_count() < n_target; ++i) {
        const Complaint& parent = *round[i].first;
        cr.attempted += round[i].second;
        if (outcomes[i].failed) {
          cr.generation_failures += round[i].second;
          continue;
        }
        for (const auto& raw : outcomes[i].completions) {
          if (cr.final_count() >= n_target) break;
          AugmentationCandidate cand;
          cand.parent_id = parent.id;
          auto sentences = cleanup(raw, config.min_tokens);
          std::vector<AugmentationCandidate> batch;
          if (sentences.empty()) {
            batch.push_back(cand);
          }
          for (auto& s : sentences) {
            AugmentationCandidate c = cand;
            c.generated_text = std::move(s);
            c.similarity = similarity(parent.text, c.generated_text, config.gate, encoder);
            batch.push_back(std::move(c));
          }
          for (auto& c : batch) {
            if (cr.final_count() >= n_target) break;
            ++cr.candidates;
            std::unordered_set<std::string> probe;  // dedup happens after anonymization
            auto verdict = gate({c}, config.gate, probe);
            if (verdict.accepted.empty()) {
              ++cr.rejected_by_reason[*verdict.rejected.front().rejection_reason];
              continue;
            }
            std::string final_text = c.generated_text;
            if (redactor) {
              final_text = redactor->redact(final_text).text;
              if (config.anonymizer.normalize) {
                final_text = anon::normalize(final_text, config.anonymizer.normalization);
              }
            }
            if (text::is_blank(final_text)) {
              ++cr.rejected_by_reason[RejectionReason::EmptyAfterCleanup];
              continue;
            }
            if (!existing.insert(text::normalized_key(final_text)).second) {
              ++cr.rejected_by_reason[RejectionReason::DuplicateOfExisting];
              continue;
            }
            Complaint added;
            added.id = insert.fresh_id();
            added.text = std::move(final_text);
            added.raw_category = parent.raw_category;
            added.category = category;
            added.source = Source::Augmented;
            added.parent_id = parent.id;
            result.additions.push_back(std::move(added));
            ++cr.accepted;
          }
        }
      }
    }
    if (cr.final_count() < n_target) {
      cr.warning = fmt::format("budget of {} attempts exhausted at {} of {}", budget, cr.final_count(),
                               n_target);
      spdlog::warn("augment: {}: {}", to_string(category), *cr.warning);
    }
    spdlog::info("augment: {}: {} -> {} (target {}, attempted {})", to_string(category), cr.base,
                 cr.final_count(), cr.target, cr.attempted);
  }
  return result;
}

AugmentResult augment_corpus(const corpus::DatasetSplit& split, const TargetDistribution& targets,
                             GeneratorClient& client, const AugmentConfig& config) {
  const auto encoder = make_encoder(config.gate.embedding_backend);
  return augment_corpus(split, targets, client, config, *encoder);
}

}  // namespace triage::aug
