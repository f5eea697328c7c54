#pragma once

#include <optional>
#include <string>
#include <vector>

#include "triage/labels.hpp"

namespace triage {

enum class Source { Original, Augmented };

std::string_view to_string(Source s);
Source parse_source(std::string_view s);

struct Complaint {
  std::string id;
  std::string text;
  std::optional<std::string> raw_category;
  std::optional<CategoryLabel> category;
  Source source = Source::Original;
  std::optional<std::string> parent_id;

  // Throws PreconditionError when an invariant does not hold.
  void validate() const;
};

using Complaints = std::vector<Complaint>;

}  // namespace triage
