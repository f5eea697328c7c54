#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace triage::text {

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
// Collapses any run of ASCII whitespace into a single space and trims.
std::string collapse_whitespace(std::string_view s);
// Dedup key: case-folded, whitespace-collapsed.
std::string normalized_key(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool is_blank(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

}  // namespace triage::text
