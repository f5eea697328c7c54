#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/complaint.hpp"

namespace triage::anon {

enum class EntityKind { Person, Phone, Email, Address, Website, Money };
enum class Detector { Pattern, Recognizer };

struct EntityKindInfo {
  EntityKind kind;
  std::string_view name;
  Detector detector;
  std::string_view placeholder;
};

const std::array<EntityKindInfo, 6>& entity_kinds();
std::string_view to_string(EntityKind kind);
std::string_view placeholder(EntityKind kind);
Detector detector_of(EntityKind kind);
std::optional<EntityKind> parse_entity_kind(std::string_view name);

// Byte offsets into the original text, half-open.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  EntityKind kind = EntityKind::Person;
  std::optional<std::string> surface;  // audit mode only
};

struct RedactionResult {
  std::string text;
  std::vector<Span> spans;
  bool audit_mode = false;
  // True when the recognizer was unreachable and only patterns ran.
  bool degraded = false;

  nlohmann::json spans_json() const;
};

struct EntityMatch {
  std::size_t start = 0;
  std::size_t end = 0;
  EntityKind kind = EntityKind::Person;
};

// Detector for PERSON / ADDRESS / MONEY. Implementations may keep state and
// must not be shared across threads; create one per worker.
class Recognizer {
 public:
  virtual ~Recognizer() = default;
  // `text` has already-claimed ranges overwritten with a mask byte.
  virtual std::vector<EntityMatch> recognize(std::string_view text) = 0;
  virtual std::string name() const = 0;
};

// Cue-word, gazetteer and shape rules for Indian names, addresses and
// amounts. No external service required.
class LexiconRecognizer final : public Recognizer {
 public:
  LexiconRecognizer();
  std::vector<EntityMatch> recognize(std::string_view text) override;
  std::string name() const override { return "lexicon"; }

 private:
  struct Patterns;
  std::shared_ptr<const Patterns> patterns_;
};

// Remote NER service: POST {"text": ...} -> {"entities": [{start, end, label}]}.
// PERSON -> PERSON, GPE/LOC/FAC -> ADDRESS, MONEY -> MONEY; other labels ignored.
// Offsets are byte offsets. Throws RecognizerUnavailable on transport failure.
class HttpRecognizer final : public Recognizer {
 public:
  HttpRecognizer(std::string base_url, std::string path = "/ner",
                 std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));
  std::vector<EntityMatch> recognize(std::string_view text) override;
  std::string name() const override { return "http:" + base_url_ + path_; }

 private:
  std::string base_url_;
  std::string path_;
  std::chrono::milliseconds timeout_;
};

enum class RecognizerFailure { Fail, Degraded };

// Pattern-kind matches (EMAIL, WEBSITE, PHONE) in precedence order, with
// earlier matches masking later ones. Also used for privacy sweeps.
std::vector<EntityMatch> find_pattern_entities(std::string_view text);

class Redactor {
 public:
  explicit Redactor(std::unique_ptr<Recognizer> recognizer = std::make_unique<LexiconRecognizer>(),
                    RecognizerFailure on_failure = RecognizerFailure::Fail);

  // Throws PreconditionError on blank text; RecognizerUnavailable when the
  // recognizer fails and the failure mode is Fail.
  RedactionResult redact(std::string_view text, bool audit_mode = false);

 private:
  std::unique_ptr<Recognizer> recognizer_;
  RecognizerFailure on_failure_;
};

struct NormalizationConfig {
  bool remove_stopwords = true;
  bool lemmatize = true;
  std::string stopword_list_id = "en+hinglish";
};

bool is_placeholder(std::string_view token);

// Stopword removal and lemmatization. Placeholder tokens pass through
// untouched; other tokens are lower-cased and stripped of edge punctuation.
std::string normalize(std::string_view text, const NormalizationConfig& config);

struct AnonymizerConfig {
  bool audit_mode = false;
  bool normalize = true;
  NormalizationConfig normalization;
  bool fail_fast = false;
  RecognizerFailure on_recognizer_failure = RecognizerFailure::Fail;
  std::string recognizer = "lexicon";  // or "http://host:port/path"
  std::size_t workers = 1;

  static AnonymizerConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

using RecognizerFactory = std::function<std::unique_ptr<Recognizer>()>;
RecognizerFactory make_recognizer_factory(const AnonymizerConfig& config);

struct ItemError {
  std::string complaint_id;
  std::string message;
};

struct RedactionStats {
  std::map<EntityKind, std::size_t> counts;
  std::size_t processed = 0;
  std::size_t degraded = 0;
  std::vector<ItemError> errors;

  nlohmann::json to_json() const;
};

struct AnonymizeResult {
  Complaints complaints;  // failed items are left out
  RedactionStats stats;
  std::vector<nlohmann::json> audit_records;  // one per output complaint
};

// redact then normalize every complaint, one recognizer per worker.
// Per-item failures are collected; with fail_fast the first one is rethrown.
AnonymizeResult anonymize_corpus(Complaints complaints, const AnonymizerConfig& config,
                                 const RecognizerFactory& factory);
AnonymizeResult anonymize_corpus(Complaints complaints, const AnonymizerConfig& config);


}  // namespace triage::anon
