#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace triage::lexicon {

using WordSet = std::unordered_set<std::string>;

// Named stopword lists: "en", "hinglish", "en+hinglish", "none".
// Throws ConfigError for any other id.
const WordSet& stopwords(std::string_view list_id);
std::vector<std::string> stopword_list_ids();

// Base form of a lower-case English word. Inflected forms are reduced only
// when the candidate base is a known English word; anything else (including
// romanized Hindi) passes through unchanged.
std::string lemmatize(std::string_view word);

const WordSet& english_base_forms();

}  // namespace triage::lexicon
