#include "triage/anonymizer.hpp"

#include <algorithm>
#include <httplib.h>

#include <boost/regex.hpp>
#include <atomic>
#include <mutex>
#include <set>
#include <thread>

#include "triage/errors.hpp"
#include "triage/lexicon.hpp"
#include "triage/text.hpp"

namespace triage::anon {
namespace {

constexpr char kMask = '\x1f';

constexpr std::array<EntityKindInfo, 6> kKinds = {{
    {EntityKind::Person, "PERSON", Detector::Recognizer, "<PERSON>"},
    {EntityKind::Phone, "PHONE", Detector::Pattern, "<PHONE>"},
    {EntityKind::Email, "EMAIL", Detector::Pattern, "<EMAIL>"},
    {EntityKind::Address, "ADDRESS", Detector::Recognizer, "<ADDRESS>"},
    {EntityKind::Website, "WEBSITE", Detector::Pattern, "<WEBSITE>"},
    {EntityKind::Money, "MONEY", Detector::Recognizer, "<MONEY>"},
}};

const EntityKindInfo& info(EntityKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  throw Error("bad entity kind");
}

const boost::regex& email_re() {
  static const boost::regex re(
      R"((?<![A-Za-z0-9._%+\-])[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,}(?![A-Za-z0-9\-]))");
  return re;
}

const boost::regex& website_re() {
  static const boost::regex re(
      R"re((?<![A-Za-z0-9@._\-])(?:(?:https?|ftp)://[^\s<>"']+|(?:www\.)?(?:[A-Za-z0-9](?:[A-Za-z0-9\-]*[A-Za-z0-9])?\.)+(?:com|in|org|net|co|io|gov|edu|info|biz|xyz|me|app|online|site|store|shop|live|tech|club|top|ly|tk|ml|ga|cf|gq|us|uk|ru|cn|pk|bd|ai|tv|cc|pw|link|win|bet|vip|loan|money|finance|today|space|website|page)(?::\d{1,5})?(?:/[^\s<>"']*)?)(?![A-Za-z0-9\-]))re",
      boost::regex::perl | boost::regex::icase);
  return re;
}

const boost::regex& phone_re() {
  static const boost::regex re(
      R"re((?<![A-Za-z0-9])(?<!\d\.)(?:(?:\+|00)?91[\s\-]?|0)?(?:\d{10}|\d{5}[\s\-]\d{5}|\d{3}[\s\-]\d{3}[\s\-]\d{4}|\d{4}[\s\-]\d{3}[\s\-]\d{3})(?![A-Za-z0-9]))re");
  return re;
}

const boost::regex& money_re() {
  static const boost::regex re(
      R"re((?<![A-Za-z0-9])(?:(?:rs\.?|inr|\xE2\x82\xB9)\s?\d[\d,]*(?:\.\d+)?(?:\s?(?:lakh|lac|crore|k|thousand|hazaar|hazar))?(?:\s?/-)?|\d[\d,]*(?:\.\d+)?\s?(?:(?:lakh|lac|crore|thousand|hazaar|hazar)\s?)?(?:rupees|rupee|rupaye|rupaiye|rupay|rs\.?|inr|/-))(?![A-Za-z0-9]))re",
      boost::regex::perl | boost::regex::icase);
  return re;
}

const boost::regex& placeholder_re() {
  static const boost::regex re(R"(<(?:PERSON|PHONE|EMAIL|ADDRESS|WEBSITE|MONEY)>)");
  return re;
}

std::string_view trim_url_tail(std::string_view s) {
  while (!s.empty() && std::string_view(".,;:!?)]}'\"").find(s.back()) != std::string_view::npos) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<EntityMatch> search(const boost::regex& re, std::string_view text, EntityKind kind) {
  std::vector<EntityMatch> out;
  boost::match_results<std::string_view::const_iterator> m;
  auto begin = text.begin();
  const auto end = text.end();
  auto flags = boost::match_default;
  while (boost::regex_search(begin, end, m, re, flags)) {
    std::size_t start = static_cast<std::size_t>(m[0].first - text.begin());
    std::size_t stop = static_cast<std::size_t>(m[0].second - text.begin());
    if (kind == EntityKind::Website) {
      stop = start + trim_url_tail(text.substr(start, stop - start)).size();
    }
    if (stop > start) out.push_back({start, stop, kind});
    begin = m[0].second == m[0].first ? m[0].second + 1 : m[0].second;
    flags |= boost::match_prev_avail;
    if (begin > end) break;
  }
  return out;
}

void mask(std::string& buffer, std::size_t start, std::size_t end) {
  std::fill(buffer.begin() + static_cast<std::ptrdiff_t>(start),
            buffer.begin() + static_cast<std::ptrdiff_t>(end), kMask);
}

bool overlaps_mask(std::string_view buffer, const EntityMatch& m) {
  if (m.end > buffer.size() || m.start >= m.end) return true;
  for (std::size_t i = m.start; i < m.end; ++i) {
    if (buffer[i] == kMask) return true;
  }
  return false;
}

}  // namespace

const std::array<EntityKindInfo, 6>& entity_kinds() { return kKinds; }
std::string_view to_string(EntityKind kind) { return info(kind).name; }
std::string_view placeholder(EntityKind kind) { return info(kind).placeholder; }
Detector detector_of(EntityKind kind) { return info(kind).detector; }

std::optional<EntityKind> parse_entity_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

nlohmann::json RedactionResult::spans_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : spans) {
    nlohmann::json j = {{"start", s.start}, {"end", s.end}, {"kind", to_string(s.kind)}};
    if (s.surface) j["surface"] = *s.surface;
    arr.push_back(std::move(j));
  }
  return arr;
}

// ---------------------------------------------------------------------------
// LexiconRecognizer

struct LexiconRecognizer::Patterns {
  boost::regex honorific_name;
  boost::regex intro_name;
  boost::regex gazetteer_name;
  boost::regex surname_name;
  std::vector<boost::regex> address_atoms;
  boost::regex pin_weak;
  boost::regex money_words;
};

namespace {

std::string alternation(std::initializer_list<std::string_view> words) {
  std::string out;
  for (auto w : words) {
    if (!out.empty()) out.push_back('|');
    out.append(w);
  }
  return out;
}

const std::string& first_names() {
  static const std::string s = alternation({
      "Aarav", "Aditya", "Ajay", "Akash", "Akshay", "Alok", "Aman", "Amit", "Anand", "Anil",
      "Anita", "Anjali", "Ankit", "Anup", "Arjun", "Arun", "Ashok", "Ayesha", "Deepak",
      "Deepika", "Dinesh", "Divya", "Gaurav", "Geeta", "Harish", "Imran", "Jyoti", "Kajal",
      "Karan", "Kavita", "Kiran", "Komal", "Manish", "Manoj", "Meena", "Mohan", "Mohit",
      "Mukesh", "Naveen", "Neha", "Nikhil", "Nisha", "Pankaj", "Pooja", "Prakash", "Pradeep",
      "Priya", "Rahul", "Raj", "Rajesh", "Rakesh", "Ramesh", "Ravi", "Rekha", "Ritu", "Rohit",
      "Sachin", "Sandeep", "Sanjay", "Santosh", "Sapna", "Seema", "Shivam", "Shweta", "Sneha",
      "Sonia", "Sunil", "Sunita", "Suresh", "Swati", "Tarun", "Usha", "Varun", "Vijay",
      "Vikas", "Vikram", "Vinod", "Vishal", "Yogesh", "Zoya", "Salman", "Farhan", "Sana",
      "Asif", "Gurpreet", "Harpreet", "Manpreet", "Simran",
  });
  return s;
}

const std::string& surnames() {
  static const std::string s = alternation({
      "Sharma", "Verma", "Singh", "Kumar", "Kumari", "Gupta", "Patel", "Yadav", "Khan",
      "Shah", "Mehta", "Joshi", "Mishra", "Pandey", "Tiwari", "Chauhan", "Reddy", "Nair",
      "Iyer", "Das", "Bose", "Sen", "Jain", "Agarwal", "Aggarwal", "Malhotra", "Kapoor",
      "Chopra", "Saxena", "Srivastava", "Rao", "Thakur", "Rathore", "Choudhary", "Chaudhary",
      "Ansari", "Qureshi", "Sheikh", "Gill", "Sandhu", "Dubey", "Shukla", "Bhatt", "Naidu",
  });
  return s;
}

const std::string& places() {
  static const std::string s = alternation({
      "New Delhi", "Delhi", "Mumbai", "Kolkata", "Chennai", "Bengaluru", "Bangalore",
      "Hyderabad", "Pune", "Ahmedabad", "Jaipur", "Lucknow", "Kanpur", "Nagpur", "Indore",
      "Bhopal", "Patna", "Ranchi", "Surat", "Vadodara", "Ludhiana", "Agra", "Varanasi",
      "Meerut", "Noida", "Gurugram", "Gurgaon", "Faridabad", "Ghaziabad", "Chandigarh",
      "Amritsar", "Dehradun", "Shimla", "Jammu", "Srinagar", "Guwahati", "Bhubaneswar",
      "Raipur", "Kochi", "Thiruvananthapuram", "Coimbatore", "Madurai", "Visakhapatnam",
      "Vijayawada", "Mysuru", "Mysore", "Goa", "Prayagraj", "Allahabad", "Gorakhpur",
      "Bareilly", "Aligarh", "Jodhpur", "Udaipur", "Ajmer", "Kota", "Gwalior", "Jabalpur",
      "Uttar Pradesh", "Madhya Pradesh", "Himachal Pradesh", "Andhra Pradesh",
      "Arunachal Pradesh", "Maharashtra", "Rajasthan", "Gujarat", "Punjab", "Haryana",
      "Bihar", "Jharkhand", "Odisha", "Kerala", "Karnataka", "Telangana", "Tamil Nadu",
      "West Bengal", "Assam", "Uttarakhand", "Chhattisgarh", "Manipur", "Meghalaya",
      "Mizoram", "Nagaland", "Tripura", "Sikkim",
  });
  return s;
}

}  // namespace

LexiconRecognizer::LexiconRecognizer() {
  static const std::shared_ptr<const Patterns> kShared = [] {
    auto p = std::make_shared<Patterns>();
    const std::string cap = R"([A-Z][a-z]+)";
    const std::string name_seq = "(" + cap + R"((?:\s+)" + cap + "){0,2})";
    p->honorific_name = boost::regex(
        R"((?<![A-Za-z])(?:Mr|Mrs|Ms|Miss|Dr|Shri|Shree|Sri|Smt|Kumari|Km|Mister)\.?\s+)" +
        name_seq);
    p->intro_name = boost::regex(
        R"((?<![A-Za-z])(?i:mera naam|mera name|my name is|naam|name is|named|called)\s*[:\-]?\s+)" +
        name_seq);
    p->gazetteer_name = boost::regex(R"((?<![A-Za-z])(?:)" + first_names() + R"()(?:\s+)" + cap +
                                     R"(){0,2}(?![A-Za-z]))");
    p->surname_name =
        boost::regex(R"((?<![A-Za-z])[A-Z][a-z]+\s+(?:)" + surnames() + R"()(?![A-Za-z]))");
    const auto icase = boost::regex::perl | boost::regex::icase;
    p->address_atoms = {
        boost::regex(
            R"((?<![A-Za-z0-9])(?:house|h|flat|plot|shop|room|khasra|qtr|quarter|makaan|makan)\s?(?:no|number|num)?\.?\s?[:#\-]?\s?\d+[A-Za-z]?(?:[/\-]\d+)?(?![A-Za-z0-9]))",
            icase),
        boost::regex(
            R"((?<![A-Za-z0-9])(?:gali|lane|street|ward|block|sector|phase|khand|floor)\s?(?:no|number)?\.?\s?[:#\-]?\s?\d+[A-Za-z]?(?![A-Za-z0-9]))",
            icase),
        boost::regex(
            R"((?<![A-Za-z])[A-Z][a-z]+\s(?i:nagar|colony|vihar|enclave|puram|road|marg|chowk|bazar|bazaar|market|mohalla|basti|layout|extension|park|gali)(?![A-Za-z]))"),
        boost::regex(
            R"((?<![A-Za-z])(?i:village|vill|gaon|gram|post|tehsil|district|dist|thana|mohalla)\.?\s+[A-Z][a-z]+(?![A-Za-z]))"),
        boost::regex(R"((?<![A-Za-z])(?:)" + places() + R"()(?![A-Za-z]))"),
        boost::regex(R"((?<![A-Za-z0-9])pin\s?(?:code)?\s?[:\-]?\s?\d{6}(?![0-9]))", icase),
    };
    p->pin_weak = boost::regex(R"((?<![0-9])\d{6}(?![0-9]))");
    p->money_words = boost::regex(
        R"((?<![A-Za-z])(?:ek|do|teen|char|paanch|panch|das|bees|pachas|sau|hazaar|hazar|lakh)\s(?:hazaar|hazar|lakh|crore|sau\s)?\s?(?:rupees|rupaye|rupaiye|rupay)(?![A-Za-z]))",
        icase);
    return std::shared_ptr<const Patterns>(std::move(p));
  }();
  patterns_ = kShared;
}

std::vector<EntityMatch> LexiconRecognizer::recognize(std::string_view text) {
  std::vector<EntityMatch> candidates;
  auto add_group = [&](const boost::regex& re, EntityKind kind, int group) {
    boost::match_results<std::string_view::const_iterator> m;
    auto begin = text.begin();
    auto flags = boost::match_default;
    while (boost::regex_search(begin, text.end(), m, re, flags)) {
      const auto& g = m[group];
      candidates.push_back({static_cast<std::size_t>(g.first - text.begin()),
                            static_cast<std::size_t>(g.second - text.begin()), kind});
      begin = m[0].second == m[0].first ? m[0].second + 1 : m[0].second;
      flags |= boost::match_prev_avail;
      if (begin > text.end()) break;
    }
  };

  const auto& p = *patterns_;
  add_group(p.honorific_name, EntityKind::Person, 1);
  add_group(p.intro_name, EntityKind::Person, 1);
  add_group(p.gazetteer_name, EntityKind::Person, 0);
  add_group(p.surname_name, EntityKind::Person, 0);
  add_group(p.money_words, EntityKind::Money, 0);

  // Address atoms, merged when separated only by commas, hyphens or spaces.
  std::vector<EntityMatch> atoms;
  for (const auto& re : p.address_atoms) {
    for (auto m : search(re, text, EntityKind::Address)) atoms.push_back(m);
  }
  std::vector<EntityMatch> weak = search(p.pin_weak, text, EntityKind::Address);
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  auto joinable = [&](std::size_t from, std::size_t to) {
    if (to < from || to - from > 3) return false;
    for (std::size_t i = from; i < to; ++i) {
      if (text[i] != ' ' && text[i] != ',' && text[i] != '-') return false;
    }
    return true;
  };
  std::vector<EntityMatch> merged;
  for (const auto& a : atoms) {
    if (!merged.empty() && (a.start < merged.back().end || joinable(merged.back().end, a.start))) {
      merged.back().end = std::max(merged.back().end, a.end);
    } else {
      merged.push_back(a);
    }
  }
  for (auto& m : merged) {
    for (const auto& w : weak) {
      if (joinable(m.end, w.start)) m.end = w.end;
    }
  }
  candidates.insert(candidates.end(), merged.begin(), merged.end());

  // Longest candidate wins a conflict; ties keep the earlier one.
  std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    return (a.end - a.start) > (b.end - b.start);
  });
  std::vector<EntityMatch> chosen;
  for (const auto& c : candidates) {
    const bool clash = std::any_of(chosen.begin(), chosen.end(), [&](const auto& o) {
      return c.start < o.end && o.start < c.end;
    });
    if (!clash) chosen.push_back(c);
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  return chosen;
}

// ---------------------------------------------------------------------------
// HttpRecognizer

HttpRecognizer::HttpRecognizer(std::string base_url, std::string path,
                               std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), path_(std::move(path)), timeout_(timeout) {}

std::vector<EntityMatch> HttpRecognizer::recognize(std::string_view text) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  const nlohmann::json body = {{"text", text}};
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw RecognizerUnavailable("recognizer " + base_url_ + path_ + " unreachable: " +
                                httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw RecognizerUnavailable("recognizer returned HTTP " + std::to_string(res->status));
  }
  std::vector<EntityMatch> out;
  try {
    const auto j = nlohmann::json::parse(res->body);
    for (const auto& e : j.at("entities")) {
      const auto label = e.at("label").get<std::string>();
      EntityKind kind;
      if (label == "PERSON") {
        kind = EntityKind::Person;
      } else if (label == "GPE" || label == "LOC" || label == "FAC" || label == "ADDRESS") {
        kind = EntityKind::Address;
      } else if (label == "MONEY") {
        kind = EntityKind::Money;
      } else {
        continue;
      }
      out.push_back({e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>(), kind});
    }
  } catch (const nlohmann::json::exception& e) {
    throw RecognizerUnavailable(std::string("malformed recognizer response: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Redactor

std::vector<EntityMatch> find_pattern_entities(std::string_view text) {
  std::string buffer(text);
  std::vector<EntityMatch> found;
  for (const auto& [re, kind] : {std::pair{&email_re(), EntityKind::Email},
                                 std::pair{&website_re(), EntityKind::Website},
                                 std::pair{&phone_re(), EntityKind::Phone}}) {
    for (const auto& m : search(*re, buffer, kind)) {
      found.push_back(m);
      mask(buffer, m.start, m.end);
    }
  }
  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  return found;
}

Redactor::Redactor(std::unique_ptr<Recognizer> recognizer, RecognizerFailure on_failure)
    : recognizer_(std::move(recognizer)), on_failure_(on_failure) {}

RedactionResult Redactor::redact(std::string_view text, bool audit_mode) {
  if (text::is_blank(text)) throw PreconditionError("cannot redact empty text");
  RedactionResult result;
  result.audit_mode = audit_mode;

  std::string buffer(text);
  for (const auto& m : search(placeholder_re(), buffer, EntityKind::Person)) {
    mask(buffer, m.start, m.end);
  }

  std::vector<EntityMatch> found;
  auto claim = [&](const std::vector<EntityMatch>& matches) {
    for (const auto& m : matches) {
      if (overlaps_mask(buffer, m)) continue;
      found.push_back(m);
      mask(buffer, m.start, m.end);
    }
  };
  claim(search(email_re(), buffer, EntityKind::Email));
  claim(search(website_re(), buffer, EntityKind::Website));
  claim(search(phone_re(), buffer, EntityKind::Phone));

  if (recognizer_) {
    try {
      auto recognized = recognizer_->recognize(buffer);
      std::sort(recognized.begin(), recognized.end(), [](const auto& a, const auto& b) {
        return a.start < b.start;
      });
      claim(recognized);
    } catch (const RecognizerUnavailable&) {
      if (on_failure_ == RecognizerFailure::Fail) throw;
      result.degraded = true;
    }
  }
  claim(search(money_re(), buffer, EntityKind::Money));

  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  std::size_t cursor = 0;
  for (const auto& m : found) {
    result.text.append(text.substr(cursor, m.start - cursor));
    result.text.append(placeholder(m.kind));
    cursor = m.end;
    Span span{m.start, m.end, m.kind, std::nullopt};
    if (audit_mode) span.surface = std::string(text.substr(m.start, m.end - m.start));
    result.spans.push_back(std::move(span));
  }
  result.text.append(text.substr(cursor));
  return result;
}

// ---------------------------------------------------------------------------
// Normalization

bool is_placeholder(std::string_view token) {
  return std::any_of(kKinds.begin(), kKinds.end(),
                     [&](const auto& k) { return k.placeholder == token; });
}

namespace {

bool is_edge_punct(char c) {
  return std::string_view(".,;:!?\"'()[]{}*-_/\\|`~#&^=+@%$").find(c) != std::string_view::npos;
}

}  // namespace

std::string normalize(std::string_view input, const NormalizationConfig& config) {
  const auto& stop = lexicon::stopwords(config.stopword_list_id);
  std::vector<std::string> out;
  for (const auto& raw : text::split_whitespace(input)) {
    std::string_view tok = raw;
    while (!tok.empty() && tok.front() != '<' && is_edge_punct(tok.front())) tok.remove_prefix(1);
    while (!tok.empty() && tok.back() != '>' && is_edge_punct(tok.back())) tok.remove_suffix(1);
    if (tok.empty()) continue;
    if (is_placeholder(tok)) {
      out.emplace_back(tok);
      continue;
    }
    // Placeholder glued to other text, e.g. "<PHONE>/<EMAIL>": keep it separate.
    if (tok.find('<') != std::string_view::npos) {
      boost::match_results<std::string_view::const_iterator> m;
      if (boost::regex_search(tok.begin(), tok.end(), m, placeholder_re())) {
        const std::string before(tok.begin(), m[0].first);
        const std::string after(m[0].second, tok.end());
        std::string rebuilt = before + " " + std::string(m[0].first, m[0].second) + " " + after;
        const std::string sub = normalize(rebuilt, config);
        if (!sub.empty()) out.push_back(sub);
        continue;
      }
    }
    std::string word = text::to_lower_ascii(tok);
    if (config.remove_stopwords && stop.contains(word)) continue;
    if (config.lemmatize) word = lexicon::lemmatize(word);
    out.push_back(std::move(word));
  }
  return text::join(out, " ");
}

// ---------------------------------------------------------------------------
// Batch

AnonymizerConfig AnonymizerConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> kKnown = {"audit",     "normalize",  "remove_stopwords",
                                               "lemmatize", "stopwords",  "fail_fast",
                                               "on_recognizer_failure", "recognizer", "workers"};
  if (!j.is_object()) throw ConfigError("anonymizer config must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!kKnown.contains(k)) throw ConfigError("unknown anonymizer option: " + k);
  }
  AnonymizerConfig c;
  c.audit_mode = j.value("audit", c.audit_mode);
  c.normalize = j.value("normalize", c.normalize);
  c.normalization.remove_stopwords = j.value("remove_stopwords", c.normalization.remove_stopwords);
  c.normalization.lemmatize = j.value("lemmatize", c.normalization.lemmatize);
  c.normalization.stopword_list_id = j.value("stopwords", c.normalization.stopword_list_id);
  lexicon::stopwords(c.normalization.stopword_list_id);  // validates the id
  c.fail_fast = j.value("fail_fast", c.fail_fast);
  const std::string mode = j.value("on_recognizer_failure", std::string("fail"));
  if (mode == "fail") {
    c.on_recognizer_failure = RecognizerFailure::Fail;
  } else if (mode == "degraded") {
    c.on_recognizer_failure = RecognizerFailure::Degraded;
  } else {
    throw ConfigError("on_recognizer_failure must be \"fail\" or \"degraded\"");
  }
  c.recognizer = j.value("recognizer", c.recognizer);
  c.workers = j.value("workers", c.workers);
  return c;
}

nlohmann::json AnonymizerConfig::to_json() const {
  return {{"audit", audit_mode},
          {"normalize", normalize},
          {"remove_stopwords", normalization.remove_stopwords},
          {"lemmatize", normalization.lemmatize},
          {"stopwords", normalization.stopword_list_id},
          {"fail_fast", fail_fast},
          {"on_recognizer_failure",
           on_recognizer_failure == RecognizerFailure::Fail ? "fail" : "degraded"},
          {"recognizer", recognizer},
          {"workers", workers}};
}

RecognizerFactory make_recognizer_factory(const AnonymizerConfig& config) {
  const std::string spec = config.recognizer;
  if (spec == "lexicon") return [] { return std::make_unique<LexiconRecognizer>(); };
  if (spec == "none") return [] { return std::unique_ptr<Recognizer>(); };
  if (spec.starts_with("http://") || spec.starts_with("https://")) {
    const auto scheme_end = spec.find("://") + 3;
    const auto path_start = spec.find('/', scheme_end);
    const std::string base = spec.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/ner" : spec.substr(path_start);
    return [base, path] { return std::make_unique<HttpRecognizer>(base, path); };
  }
  throw ConfigError("unknown recognizer \"" + spec + "\"");
}

nlohmann::json RedactionStats::to_json() const {
  nlohmann::json by_kind = nlohmann::json::object();
  for (const auto& [kind, n] : counts) by_kind[std::string(to_string(kind))] = n;
  nlohmann::json errs = nlohmann::json::array();
  for (const auto& e : errors) errs.push_back({{"id", e.complaint_id}, {"message", e.message}});
  return {{"processed", processed}, {"degraded", degraded}, {"entities", by_kind}, {"errors", errs}};
}

AnonymizeResult anonymize_corpus(Complaints complaints, const AnonymizerConfig& config,
                                 const RecognizerFactory& factory) {
  struct Outcome {
    RedactionResult redaction;
    std::string error;
    bool ok = false;
  };
  std::vector<Outcome> outcomes(complaints.size());
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(config.workers, complaints.size()));
  std::mutex first_error_mutex;
  std::exception_ptr first_error;
  std::atomic<bool> stop{false};

  auto run = [&](std::size_t worker) {
    Redactor redactor(factory(), config.on_recognizer_failure);
    for (std::size_t i = worker; i < complaints.size(); i += workers) {
      if (stop.load()) return;
      try {
        outcomes[i].redaction = redactor.redact(complaints[i].text, config.audit_mode);
        outcomes[i].ok = true;
      } catch (const Error& e) {
        outcomes[i].error = e.what();
        if (config.fail_fast) {
          std::lock_guard lock(first_error_mutex);
          if (!first_error) first_error = std::current_exception();
          stop = true;
          return;
        }
      }
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  AnonymizeResult result;
  for (std::size_t i = 0; i < complaints.size(); ++i) {
    auto& c = complaints[i];
    auto& o = outcomes[i];
    ++result.stats.processed;
    if (!o.ok) {
      result.stats.errors.push_back({c.id, o.error});
      continue;
    }
    for (const auto& s : o.redaction.spans) ++result.stats.counts[s.kind];
    if (o.redaction.degraded) ++result.stats.degraded;
    std::string body = config.normalize ? normalize(o.redaction.text, config.normalization)
                                        : o.redaction.text;
    if (text::is_blank(body)) {
      result.stats.errors.push_back({c.id, "empty after normalization"});
      continue;
    }
    result.audit_records.push_back({{"id", c.id},
                                    {"degraded", o.redaction.degraded},
                                    {"spans", o.redaction.spans_json()}});
    c.text = std::move(body);
    result.complaints.push_back(std::move(c));
  }
  return result;
}

AnonymizeResult anonymize_corpus(Complaints complaints, const AnonymizerConfig& config) {
  return anonymize_corpus(std::move(complaints), config, make_recognizer_factory(config));
}

}  // namespace triage::anon
