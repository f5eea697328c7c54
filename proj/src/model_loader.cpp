#include "triage/model_loader.hpp"

#include <algorithm>
#include <fstream>

#include "triage/baselines.hpp"
#include "triage/classifier.hpp"
#include "triage/errors.hpp"

namespace triage {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_metadata(const fs::path& dir) {
  const fs::path p = dir / "metadata.json";
  std::ifstream in(p);
  if (!in) throw MissingArtifactError("missing " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IntegrityError(p.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace

std::unique_ptr<Classifier> load_classifier(const fs::path& dir) {
  const json meta = read_metadata(dir);
  const std::string kind = meta.value("kind", "");
  if (kind == "transformer") return clf::TransformerClassifier::load(dir);
  if (kind == "baseline") return base::BaselineModel::load(dir);
  throw IntegrityError("unknown checkpoint kind \"" + kind + "\" in " + dir.string());
}

json CheckpointInfo::to_json() const {
  return {{"name", name},
          {"path", path.string()},
          {"kind", kind},
          {"model_id", model_id},
          {"fingerprint", fingerprint}};
}

std::vector<CheckpointInfo> list_checkpoints(const fs::path& root) {
  std::vector<CheckpointInfo> out;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) return out;
  auto probe = [&](const fs::path& dir) {
    if (!fs::exists(dir / "metadata.json")) return;
    try {
      const json meta = read_metadata(dir);
      out.push_back({dir, dir.filename().string(), meta.value("kind", ""), meta.value("model_id", ""),
                     meta.value("fingerprint", "")});
    } catch (const Error&) {
    }
  };
  probe(root);
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    if (entry.is_directory()) probe(entry.path());
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
  return out;
}

}  // namespace triage
