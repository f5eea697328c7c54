#include "triage/synth.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include <fmt/format.h>

#include "triage/labels.hpp"
#include "triage/text.hpp"
#include "triage/rng.hpp"

namespace triage::synth {
namespace {

template <class T, std::size_t N>
const T& pick(Rng& rng, const std::array<T, N>& items) {
  return items[rng.below(N)];
}

std::string digits(Rng& rng, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + rng.below(10)));
  return s;
}

std::string random_phone(Rng& rng) {
  std::string core = std::to_string(6 + rng.below(4)) + digits(rng, 9);
  std::string body;
  switch (rng.below(4)) {
    case 0: body = core; break;
    case 1: body = core.substr(0, 5) + " " + core.substr(5); break;
    case 2: body = core.substr(0, 3) + "-" + core.substr(3, 3) + "-" + core.substr(6); break;
    default: body = core.substr(0, 5) + "-" + core.substr(5); break;
  }
  static constexpr std::array<std::string_view, 6> kPrefix = {"", "", "+91", "+91 ", "+91-", "0"};
  return std::string(kPrefix[rng.below(kPrefix.size())]) + body;
}

std::string random_local_part(Rng& rng) {
  static constexpr std::array<std::string_view, 12> kStems = {
      "rahul", "priya", "support", "kyc.update", "helpdesk", "amit_k", "neha.s",
      "refund", "loan.offer", "user", "win_prize", "cust.care"};
  std::string s(kStems[rng.below(kStems.size())]);
  if (rng.below(2)) s += digits(rng, 1 + rng.below(4));
  return s;
}

std::string random_email(Rng& rng) {
  static constexpr std::array<std::string_view, 8> kDomains = {
      "gmail.com", "yahoo.co.in", "outlook.com", "rediffmail.com",
      "xyz-bank.in", "paytm-help.net", "mail.example.org", "quickloan.co"};
  return random_local_part(rng) + "@" + std::string(kDomains[rng.below(kDomains.size())]);
}

std::string random_url(Rng& rng) {
  static constexpr std::array<std::string_view, 8> kHosts = {
      "xyz", "free-reward", "kyc-verify", "sbi-update", "lucky-draw", "investpro", "shopdeal",
      "loan4u"};
  static constexpr std::array<std::string_view, 8> kTlds = {
      "com", "in", "co.in", "net", "org", "xyz", "online", "site"};
  static constexpr std::array<std::string_view, 4> kScheme = {"", "http://", "https://",
                                                              "https://www."};
  static constexpr std::array<std::string_view, 4> kPath = {"", "/login", "/claim?id=42",
                                                            "/app/download"};
  return std::string(kScheme[rng.below(4)]) + std::string(kHosts[rng.below(8)]) + "." +
         std::string(kTlds[rng.below(8)]) + std::string(kPath[rng.below(4)]);
}

// Templates with {E} email, {P} phone, {U} url slots.
constexpr std::array<std::string_view, 12> kPiiTemplates = {
    "mujhe {P} se call aaya aur bola KYC update karo",
    "mail bheja tha {E} par lekin koi reply nahi aaya",
    "is link {U} par click kiya aur paise kat gaye.",
    "fraudster ka number {P} hai, usne {E} se bhi mail kiya",
    "unhone website {U} pe login karwaya aur OTP maanga",
    "call from {P} and email {E}, please help",
    "ek message aaya {U} aur {P} pe contact karne bola",
    "mera account hack hua, recovery mail {E} change kar diya",
    "sir {P} wale bande ne {U} se app download karwaya",
    "lottery ka message {E} se aaya, link tha {U}",
    "number {P}, doosra number {P}",
    "visit {U}. fir {E} pe documents bhejo",
};

}  // namespace

std::vector<PiiText> pii_texts(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PiiText> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string_view tpl = kPiiTemplates[rng.below(kPiiTemplates.size())];
    PiiText t;
    for (std::size_t k = 0; k < tpl.size(); ++k) {
      if (tpl[k] == '{' && k + 2 < tpl.size() && tpl[k + 2] == '}') {
        std::string value;
        anon::EntityKind kind{};
        switch (tpl[k + 1]) {
          case 'P': value = random_phone(rng); kind = anon::EntityKind::Phone; break;
          case 'E': value = random_email(rng); kind = anon::EntityKind::Email; break;
          default: value = random_url(rng); kind = anon::EntityKind::Website; break;
        }
        t.embedded.push_back({t.text.size(), t.text.size() + value.size(), kind});
        t.text += value;
        k += 2;
      } else {
        t.text.push_back(tpl[k]);
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::string source_label(CategoryLabel label) {
  for (const auto& [raw, target] : LabelMap::standard().entries) {
    if (target == label) return raw;
  }
  return std::string(to_string(label));
}

namespace {

struct ClassVocab {
  std::vector<std::string> nouns;
  std::vector<std::string> verbs;
};

const std::map<CategoryLabel, ClassVocab>& class_vocab() {
  using C = CategoryLabel;
  static const std::map<C, ClassVocab> kVocab = {
      {C::FinancialFraud,
       {{"upi", "paise", "bank", "otp", "transaction", "refund", "wallet", "kyc", "debit"},
        {"kat gaye", "transfer ho gaye", "nikal liye", "deduct hue", "fraud kiya"}}},
      {C::SocialMediaCrime,
       {{"instagram", "facebook", "profile", "post", "followers", "reel", "dp", "comment"},
        {"fake bana di", "troll kar rahe", "viral kar di", "morph kar di", "tag kiya"}}},
      {C::HackingDamage,
       {{"laptop", "server", "password", "email id", "system", "malware", "website admin"},
        {"hack ho gaya", "access le liya", "lock kar diya", "crash kar diya", "data mita diya"}}},
      {C::CryptocurrencyCrime,
       {{"bitcoin", "usdt", "crypto", "exchange", "token", "mining", "binance", "coin"},
        {"invest karwaya", "withdraw nahi ho raha", "scheme me fasaya", "double karne bola",
         "freeze kar diya"}}},
      {C::Ransomware,
       {{"files", "encryption", "ransom", "decrypt key", "computer", "network", "backup"},
        {"encrypt ho gaye", "ransom maang rahe", "unlock ke liye paise maange",
         "extension badal gaya", "note chhod diya"}}},
      {C::GamblingBetting,
       {{"betting app", "satta", "casino", "rummy", "odds", "cricket match", "jackpot"},
        {"haar gaya", "lat lag gayi", "jeeta amount nahi diya", "id block kar di",
         "deposit karwaya"}}},
      {C::CyberTerrorism,
       {{"dhamki", "bomb", "extremist group", "propaganda", "channel", "radical video"},
        {"share kar rahe", "dhamka rahe", "recruit kar rahe", "failaa rahe", "plan bata rahe"}}},
      {C::SexuallyObsceneContent,
       {{"obscene video", "ganda message", "nude photo", "adult clip", "vulgar chat"},
        {"bhej raha", "leak karne ki dhamki", "group me daala", "bar bar bhejta", "record kiya"}}},
  };
  return kVocab;
}

constexpr std::array<std::string_view, 10> kFiller = {
    "sir", "please help", "jaldi action lo", "kal raat", "mere saath", "complaint hai ki",
    "bahut pareshan hoon", "police station gaya tha", "kuch samajh nahi aaya", "ji"};

}  // namespace

Complaints separable_corpus(const SmokeOptions& options) {
  std::vector<CategoryLabel> classes = options.classes;
  if (classes.empty()) {
    classes = {CategoryLabel::FinancialFraud, CategoryLabel::SocialMediaCrime,
               CategoryLabel::HackingDamage, CategoryLabel::CryptocurrencyCrime};
  }
  Rng rng(options.seed);
  Complaints out;
  std::set<std::string> seen;
  std::size_t serial = 0;
  for (CategoryLabel label : classes) {
    const auto it = class_vocab().find(label);
    const ClassVocab* vocab = it == class_vocab().end() ? nullptr : &it->second;
    std::size_t made = 0;
    while (made < options.per_class) {
      std::string text;
      auto filler = [&] { return std::string(kFiller[rng.below(kFiller.size())]); };
      if (rng.below(2)) text += filler() + " ";
      if (vocab) {
        text += vocab->nouns[rng.below(vocab->nouns.size())] + " " +
                vocab->verbs[rng.below(vocab->verbs.size())];
        text += " aur " + vocab->nouns[rng.below(vocab->nouns.size())] + " bhi " +
                vocab->verbs[rng.below(vocab->verbs.size())];
      } else {
        // Classes without a hand-written vocabulary get a generated one.
        const std::string tag = "k" + std::to_string(index_of(label));
        text += tag + "term" + std::to_string(rng.below(6)) + " " + tag + "act" +
                std::to_string(rng.below(6)) + " " + tag + "obj" + std::to_string(rng.below(6));
      }
      if (options.with_pii) {
        switch (rng.below(5)) {
          case 0: text += " mera number " + random_phone(rng) + " hai"; break;
          case 1: text += " Rs. " + std::to_string(500 + rng.below(90000)) + " gaye"; break;
          case 2: text += " contact " + random_email(rng); break;
          default: break;
        }
      }
      text += " " + filler() + " " + std::to_string(rng.below(1000));
      if (!seen.insert(text).second) continue;
      Complaint c;
      c.id = "s-" + std::to_string(100000 + serial++);
      c.text = text;
      c.raw_category = source_label(label);
      out.push_back(std::move(c));
      ++made;
    }
  }
  return out;
}

Complaints sized_corpus(const std::map<CategoryLabel, std::size_t>& counts, std::uint64_t seed) {
  Rng rng(seed);
  Complaints out;
  std::size_t total = 0;
  for (const auto& [c, n] : counts) total += n;
  out.reserve(total);
  std::set<std::string> seen;
  std::size_t serial = 0;
  for (const auto& [label, n] : counts) {
    const auto it = class_vocab().find(label);
    const std::string tag = "k" + std::to_string(index_of(label));
    std::size_t made = 0;
    while (made < n) {
      std::vector<std::string> words;
      auto filler = [&] {
        for (const auto& w : text::split_whitespace(kFiller[rng.below(kFiller.size())])) words.push_back(w);
      };
      filler();
      for (int part = 0; part < 2; ++part) {
        if (it != class_vocab().end()) {
          const auto& v = it->second;
          for (const auto& w : text::split_whitespace(v.nouns[rng.below(v.nouns.size())])) words.push_back(w);
          for (const auto& w : text::split_whitespace(v.verbs[rng.below(v.verbs.size())])) words.push_back(w);
        } else {
          words.push_back(tag + "term" + std::to_string(rng.below(8)));
          words.push_back(tag + "act" + std::to_string(rng.below(8)));
        }
      }
      while (words.size() < 9) filler();
      words.push_back("case" + std::to_string(rng.below(1000000)));
      if (words.size() > 14) words.erase(words.begin() + 13, words.end() - 1);
      std::string text = text::join(words, " ");
      if (!seen.insert(text).second) continue;
      Complaint c;
      c.id = fmt::format("b-{:07d}", ++serial);
      c.text = std::move(text);
      c.raw_category = source_label(label);
      c.category = label;
      out.push_back(std::move(c));
      ++made;
    }
  }
  return out;
}

Complaints order_corpus(const SmokeOptions& options) {
  std::vector<CategoryLabel> classes = options.classes;
  if (classes.empty()) {
    classes = {CategoryLabel::FinancialFraud, CategoryLabel::HackingDamage,
               CategoryLabel::SocialMediaCrime};
  }
  // One event family per class; each family has paraphrase variants.
  static const std::vector<std::vector<std::string>> kEvents = {
      {"paise kat gaye", "amount debit hua", "balance khatam hua", "paisa nikal gaya"},
      {"account hack hua", "password badal gaya", "login chheen liya", "id par kabza hua"},
      {"photo viral hui", "profile fake bani", "post leak hui", "video share hua"},
      {"coin freeze hua", "token gayab hua", "wallet band hua", "exchange ruk gaya"},
      {"files lock hui", "data encrypt hua", "ransom note aaya", "backup mit gaya"},
  };
  static constexpr std::array<std::string_view, 6> kOpeners = {
      "", "sir", "complaint hai ki", "kal raat", "mere saath", "please suniye"};
  static constexpr std::array<std::string_view, 4> kJoin = {"phir", "uske baad", "aur fir",
                                                            "baad me"};
  const std::size_t k = std::min(classes.size(), kEvents.size());
  Rng rng(options.seed);
  Complaints out;
  std::set<std::string> seen;
  std::size_t serial = 0;
  for (std::size_t cls = 0; cls < k; ++cls) {
    std::size_t made = 0;
    while (made < options.per_class) {
      // The class's own event comes first; the others follow in random order.
      std::vector<std::size_t> rest;
      for (std::size_t e = 0; e < k; ++e) {
        if (e != cls) rest.push_back(e);
      }
      rng.shuffle(rest);
      std::string text(kOpeners[rng.below(kOpeners.size())]);
      auto event = [&](std::size_t e) { return kEvents[e][rng.below(kEvents[e].size())]; };
      if (!text.empty()) text += " ";
      text += event(cls);
      for (std::size_t e : rest) {
        text += " " + std::string(kJoin[rng.below(kJoin.size())]) + " " + event(e);
      }
      if (!seen.insert(text).second) {
        // Small template space: disambiguate with a trailing reference number.
        text += " ref " + std::to_string(rng.below(100000));
        if (!seen.insert(text).second) continue;
      }
      Complaint c;
      c.id = "o-" + std::to_string(100000 + serial++);
      c.text = text;
      c.raw_category = source_label(classes[cls]);
      out.push_back(std::move(c));
      ++made;
    }
  }
  return out;
}

corpus::DatasetSplit smoke_split(const Complaints& raw, double validation_fraction,
                                 double test_fraction, std::uint64_t seed) {
  auto standardized = corpus::standardize_labels(raw, corpus::LabelPolicy{}).complaints;
  const auto outer = corpus::split(standardized, test_fraction, seed);
  const double inner = validation_fraction / (1.0 - test_fraction);
  return corpus::split(outer.train, inner, seed + 1, outer.validation);
}

std::map<CategoryLabel, std::size_t> raw_smoke_counts() {
  using C = CategoryLabel;
  return {{C::FinancialFraud, 160}, {C::SocialMediaCrime, 96}, {C::HackingDamage, 64},
          {C::CryptocurrencyCrime, 40}, {C::GamblingBetting, 28}, {C::Ransomware, 20}};
}

RawDataset raw_smoke_dataset(std::uint64_t seed) {
  const auto counts = raw_smoke_counts();
  SmokeOptions opts;
  opts.seed = seed;
  opts.per_class = 0;
  for (const auto& [c, n] : counts) {
    opts.classes.push_back(c);
    opts.per_class = std::max(opts.per_class, n);
  }
  const Complaints pool = separable_corpus(opts);

  RawDataset out;
  out.train.header = out.test.header = {"crimeaditionalinfo", "category"};
  std::map<CategoryLabel, std::size_t> taken;
  for (const auto& c : pool) {
    const auto label = *LabelMap::standard().lookup(*c.raw_category);
    const std::size_t k = taken[label]++;
    const std::size_t n = counts.at(label);
    if (k >= n) continue;
    // every fourth row goes to test
    (k % 4 == 3 ? out.test : out.train).rows.push_back({c.text, *c.raw_category});
  }
  Rng rng(seed ^ 0x5eedULL);
  rng.shuffle(out.train.rows);
  rng.shuffle(out.test.rows);

  auto insert_at = [&](csv::Table& t, std::size_t pos, std::vector<std::string> row) {
    t.rows.insert(t.rows.begin() + static_cast<std::ptrdiff_t>(std::min(pos, t.rows.size())), std::move(row));
  };
  insert_at(out.train, 7, {"NaN", source_label(CategoryLabel::FinancialFraud)});
  insert_at(out.train, 31, {"", source_label(CategoryLabel::HackingDamage)});
  insert_at(out.train, 58, out.train.rows[12]);
  insert_at(out.train, 90, out.train.rows[40]);
  insert_at(out.train, 120, {"is post me objectionable content hai, hatao please", "Report Unlawful Content"});
  insert_at(out.test, 5, {"nan", source_label(CategoryLabel::SocialMediaCrime)});
  insert_at(out.test, 11, {"ladki ko online pareshan kiya ja raha hai, number 9876543210", "Crime Against Women & Children"});
  insert_at(out.test, 23, {"school ki bacchi ko message bhej kar dhamka raha hai", "Crime Against Women & Children"});
  return out;
}

}  // namespace triage::synth
