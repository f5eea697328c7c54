#include "triage/lexicon.hpp"

#include <array>
#include <unordered_map>
#include <utility>

#include "triage/errors.hpp"

namespace triage::lexicon {
namespace {

// English function words.
constexpr std::string_view kEnglish[] = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
    "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
    "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "this", "that", "these", "those", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
    "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by",
    "for", "with", "about", "against", "between", "into", "through", "during", "before",
    "after", "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over",
    "under", "again", "further", "then", "once", "here", "there", "when", "where", "why",
    "how", "all", "any", "both", "each", "few", "more", "most", "other", "some", "such", "no",
    "nor", "not", "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will",
    "just", "don", "should", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain", "aren",
    "couldn", "didn", "doesn", "hadn", "hasn", "haven", "isn", "ma", "mightn", "mustn",
    "needn", "shan", "shouldn", "wasn", "weren", "won", "wouldn",
};

// Romanized Hindi function words common in code-mixed complaints.
constexpr std::string_view kHinglish[] = {
    "hai", "hain", "ho", "hota", "hoti", "hote", "tha", "thi", "the", "ka", "ki", "ke", "ko",
    "se", "me", "mein", "mai", "ne", "par", "pe", "aur", "ya", "bhi", "to", "toh", "hi", "na",
    "ek", "koi", "kuch", "yeh", "ye", "woh", "wo", "vo", "is", "us", "iss", "uss", "isko",
    "usko", "isne", "usne", "jo", "jab", "tab", "kya", "kyun", "kyunki", "ki", "kar", "karke",
    "liye", "lie", "wala", "wali", "wale", "waala", "apna", "apni", "apne", "mera", "meri",
    "mere", "mujhe", "mujhko", "hum", "hame", "humne", "maine", "tum", "aap", "aapka",
    "aapki", "unka", "unki", "unke", "uska", "uski", "uske", "unhone", "jise", "jisne",
    "bhai", "ji", "sir", "madam", "please", "plz", "pls", "abhi", "fir", "phir", "sab",
    "saath", "sath", "tak", "bahut", "bohot", "ab", "hua", "hui", "hue", "raha", "rahi",
    "rahe", "gaya", "gayi", "gaye", "diya", "di", "de", "dena", "lekin", "magar", "agar",
};

// Irregular inflections.
const std::unordered_map<std::string_view, std::string_view>& irregulars() {
  static const std::unordered_map<std::string_view, std::string_view> kMap = {
      {"am", "be"}, {"is", "be"}, {"are", "be"}, {"was", "be"}, {"were", "be"}, {"been", "be"},
      {"has", "have"}, {"had", "have"}, {"does", "do"}, {"did", "do"}, {"done", "do"},
      {"went", "go"}, {"gone", "go"}, {"goes", "go"}, {"got", "get"}, {"gotten", "get"},
      {"made", "make"}, {"said", "say"}, {"paid", "pay"}, {"sent", "send"}, {"took", "take"},
      {"taken", "take"}, {"gave", "give"}, {"given", "give"}, {"came", "come"},
      {"knew", "know"}, {"known", "know"}, {"told", "tell"}, {"thought", "think"},
      {"bought", "buy"}, {"sold", "sell"}, {"lost", "lose"}, {"stole", "steal"},
      {"stolen", "steal"}, {"found", "find"}, {"left", "leave"}, {"kept", "keep"},
      {"felt", "feel"}, {"met", "meet"}, {"brought", "bring"}, {"began", "begin"},
      {"begun", "begin"}, {"wrote", "write"}, {"written", "write"}, {"spoke", "speak"},
      {"spoken", "speak"}, {"children", "child"}, {"men", "man"}, {"women", "woman"},
      {"ran", "run"}, {"saw", "see"}, {"seen", "see"}, {"heard", "hear"}, {"held", "hold"},
      {"led", "lead"}, {"lent", "lend"}, {"spent", "spend"}, {"built", "build"},
      {"caught", "catch"}, {"taught", "teach"}, {"sought", "seek"}, {"won", "win"},
      {"shown", "show"}, {"hid", "hide"}, {"hidden", "hide"}, {"broke", "break"},
      {"broken", "break"}, {"chose", "choose"}, {"chosen", "choose"}, {"forgot", "forget"},
      {"forgotten", "forget"}, {"froze", "freeze"}, {"frozen", "freeze"}, {"became", "become"},
      {"understood", "understand"}, {"stood", "stand"}, {"fell", "fall"}, {"fallen", "fall"},
      {"drove", "drive"}, {"driven", "drive"}, {"rode", "ride"}, {"ridden", "ride"},
      {"wore", "wear"}, {"worn", "wear"}, {"tore", "tear"}, {"torn", "tear"},
      {"threw", "throw"}, {"thrown", "throw"}, {"blew", "blow"}, {"blown", "blow"},
      {"grew", "grow"}, {"grown", "grow"}, {"ate", "eat"}, {"eaten", "eat"}, {"fled", "flee"},
      {"fought", "fight"}, {"hung", "hang"}, {"struck", "strike"}, {"swore", "swear"},
      {"sworn", "swear"}, {"woke", "wake"}, {"woken", "wake"}, {"dealt", "deal"},
      {"meant", "mean"}, {"read", "read"}, {"people", "people"}, {"data", "data"},
      {"media", "media"}, {"news", "news"}, {"money", "money"}, {"bus", "bus"},
      {"status", "status"}, {"address", "address"}, {"business", "business"},
      {"process", "process"}, {"access", "access"}, {"loss", "loss"}, {"pass", "pass"},
      {"class", "class"}, {"glass", "glass"}, {"virus", "virus"}, {"viruses", "virus"},
      {"analysis", "analysis"}, {"series", "series"}, {"this", "this"}, {"his", "his"},
      {"us", "us"}, {"does", "do"}, {"lives", "life"}, {"wives", "wife"}, {"knives", "knife"},
      {"thieves", "thief"}, {"leaves", "leave"},
  };
  return kMap;
}

// Detachment rules: inflected suffix -> base suffix. Tried in order; the
// first candidate present in the base-form lexicon wins.
constexpr std::array<std::pair<std::string_view, std::string_view>, 16> kRules = {{
    {"sses", "ss"},
    {"ies", "y"},
    {"shes", "sh"},
    {"ches", "ch"},
    {"xes", "x"},
    {"zes", "z"},
    {"ses", "s"},
    {"es", "e"},
    {"es", ""},
    {"s", ""},
    {"ied", "y"},
    {"ed", "e"},
    {"ed", ""},
    {"ing", "e"},
    {"ing", ""},
    {"men", "man"},
}};

bool is_ascii_word(std::string_view w) {
  if (w.empty()) return false;
  for (char c : w) {
    if (c < 'a' || c > 'z') return false;
  }
  return true;
}

template <std::size_t N>
WordSet to_set(const std::string_view (&words)[N]) {
  WordSet s;
  for (auto w : words) s.emplace(w);
  return s;
}

bool is_consonant(char c) { return std::string_view("aeiou").find(c) == std::string_view::npos; }

}  // namespace

const WordSet& stopwords(std::string_view list_id) {
  static const WordSet kEn = to_set(kEnglish);
  static const WordSet kHi = to_set(kHinglish);
  static const WordSet kBoth = [] {
    WordSet s = kEn;
    s.insert(kHi.begin(), kHi.end());
    return s;
  }();
  static const WordSet kNone;
  if (list_id == "en") return kEn;
  if (list_id == "hinglish") return kHi;
  if (list_id == "en+hinglish") return kBoth;
  if (list_id == "none") return kNone;
  throw ConfigError("unknown stopword list \"" + std::string(list_id) + "\"");
}

std::vector<std::string> stopword_list_ids() { return {"en", "hinglish", "en+hinglish", "none"}; }

std::string lemmatize(std::string_view word) {
  const std::string w(word);
  if (!is_ascii_word(w)) return w;
  if (auto it = irregulars().find(w); it != irregulars().end()) return std::string(it->second);
  const auto& base = english_base_forms();
  if (base.contains(w)) return w;
  for (const auto& [suffix, replacement] : kRules) {
    if (w.size() <= suffix.size() + 1 || !w.ends_with(suffix)) continue;
    std::string stem = w.substr(0, w.size() - suffix.size());
    std::string candidate = stem + std::string(replacement);
    if (base.contains(candidate)) return candidate;
    // stopped -> stop, hugging -> hug
    if (replacement.empty() && stem.size() >= 3 && stem.back() == stem[stem.size() - 2] &&
        is_consonant(stem.back())) {
      stem.pop_back();
      if (base.contains(stem)) return stem;
    }
  }
  return w;
}

}  // namespace triage::lexicon
