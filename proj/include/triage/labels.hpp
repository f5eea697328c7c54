#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace triage {

// The closed set of standardized crime categories.
enum class CategoryLabel : int {
  OtherCyberCrime = 0,
  ChildAbuseMaterial,
  CryptocurrencyCrime,
  CyberAttackDependentCrimes,
  CyberTerrorism,
  HackingDamage,
  CyberTrafficking,
  FinancialFraud,
  GamblingBetting,
  SocialMediaCrime,
  Ransomware,
  RapeSexualAbuseContent,
  SexuallyExplicitContent,
  SexuallyObsceneContent,
};

inline constexpr std::size_t kNumCategories = 14;

// Canonical ordering, used as the default label_order of every model.
const std::array<CategoryLabel, kNumCategories>& all_categories();

std::string_view to_string(CategoryLabel label);
// Exact match against the standardized names; nullopt otherwise.
std::optional<CategoryLabel> parse_category(std::string_view name);
// Throws UnknownLabelError.
CategoryLabel require_category(std::string_view name);

inline std::size_t index_of(CategoryLabel label) { return static_cast<std::size_t>(label); }

// Source-label to standardized-label dictionary for the complaint corpus.
struct LabelMap {
  std::map<std::string, CategoryLabel, std::less<>> entries;

  // The 14 verbose source categories and their standardized targets.
  static LabelMap standard();
  std::optional<CategoryLabel> lookup(std::string_view raw) const;
};

}  // namespace triage
