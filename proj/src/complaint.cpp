#include "triage/complaint.hpp"

#include "triage/errors.hpp"
#include "triage/text.hpp"

namespace triage {

std::string_view to_string(Source s) { return s == Source::Original ? "original" : "augmented"; }

Source parse_source(std::string_view s) {
  if (s == "original" || s.empty()) return Source::Original;
  if (s == "augmented") return Source::Augmented;
  throw ConfigError("unknown complaint source: " + std::string(s));
}

void Complaint::validate() const {
  if (id.empty()) throw PreconditionError("complaint without id");
  if (text::is_blank(text)) throw PreconditionError("complaint " + id + " has empty text");
  if ((source == Source::Augmented) != parent_id.has_value()) {
    throw PreconditionError("complaint " + id + ": augmented source and parent_id must go together");
  }
}

}  // namespace triage
