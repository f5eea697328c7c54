#include "triage/labels.hpp"

#include "triage/errors.hpp"

namespace triage {
namespace {

constexpr std::array<std::string_view, kNumCategories> kNames = {
    "Other Cyber Crime",
    "Child Abuse Material",
    "Cryptocurrency Crime",
    "Cyber Attack/Dependent Crimes",
    "Cyber Terrorism",
    "Hacking/Damage",
    "Cyber Trafficking",
    "Financial Fraud",
    "Gambling/Betting",
    "Social Media Crime",
    "Ransomware",
    "Rape or Sexual Abuse Content",
    "Sexually Explicit Content",
    "Sexually Obscene Content",
};

}  // namespace

const std::array<CategoryLabel, kNumCategories>& all_categories() {
  static const auto kAll = [] {
    std::array<CategoryLabel, kNumCategories> a{};
    for (std::size_t i = 0; i < kNumCategories; ++i) a[i] = static_cast<CategoryLabel>(i);
    return a;
  }();
  return kAll;
}

std::string_view to_string(CategoryLabel label) { return kNames.at(index_of(label)); }

std::optional<CategoryLabel> parse_category(std::string_view name) {
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    if (kNames[i] == name) return static_cast<CategoryLabel>(i);
  }
  return std::nullopt;
}

CategoryLabel require_category(std::string_view name) {
  if (auto c = parse_category(name)) return *c;
  throw UnknownLabelError(std::string(name));
}

LabelMap LabelMap::standard() {
  using C = CategoryLabel;
  LabelMap m;
  m.entries = {
      {"Any Other Cyber Crime", C::OtherCyberCrime},
      {"Child Pornography CPChild Sexual Abuse Material CSAM", C::ChildAbuseMaterial},
      {"Cryptocurrency Crime", C::CryptocurrencyCrime},
      {"Cyber Attack/ Dependent Crimes", C::CyberAttackDependentCrimes},
      {"Cyber Terrorism", C::CyberTerrorism},
      {"Hacking Damage to computer computer system etc", C::HackingDamage},
      {"Online Cyber Trafficking", C::CyberTrafficking},
      {"Online Financial Fraud", C::FinancialFraud},
      {"Online Gambling Betting", C::GamblingBetting},
      {"Online and Social Media Related Crime", C::SocialMediaCrime},
      {"Ransomware", C::Ransomware},
      {"RapeGang Rape RGRSexually Abusive Content", C::RapeSexualAbuseContent},
      {"Sexually Explicit Act", C::SexuallyExplicitContent},
      {"Sexually Obscene material", C::SexuallyObsceneContent},
  };
  return m;
}

std::optional<CategoryLabel> LabelMap::lookup(std::string_view raw) const {
  if (auto it = entries.find(raw); it != entries.end()) return it->second;
  // Already-standardized names map to themselves (e.g. reviewed exports).
  return parse_category(raw);
}

}  // namespace triage
