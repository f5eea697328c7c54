#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/prediction.hpp"

namespace triage {

// Reads metadata.json and dispatches on "kind" (transformer or baseline).
// Throws MissingArtifactError / IntegrityError like the per-kind loaders.
std::unique_ptr<Classifier> load_classifier(const std::filesystem::path& dir);

struct CheckpointInfo {
  std::filesystem::path path;
  std::string name;  // directory name
  std::string kind;
  std::string model_id;
  std::string fingerprint;

  nlohmann::json to_json() const;
};

// Directories holding a metadata.json: `root` itself and its immediate
// children, sorted by name. Unreadable metadata is skipped.
std::vector<CheckpointInfo> list_checkpoints(const std::filesystem::path& root);

}  // namespace triage
