#include "triage/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "triage/errors.hpp"
#include "triage/hashing.hpp"
#include "triage/rng.hpp"
#include "triage/text.hpp"

namespace triage::corpus {
namespace {

std::string make_id(const std::string& prefix, std::size_t row) {
  std::string digits = std::to_string(row);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return prefix + "-" + digits;
}

const std::vector<std::string> kComplaintHeader = {"id",       "text",   "raw_category",
                                                   "category", "source", "parent_id"};

}  // namespace

CleaningReport& CleaningReport::then(const CleaningReport& next) {
  output_count = next.output_count;
  removed_duplicates += next.removed_duplicates;
  removed_missing += next.removed_missing;
  removed_rare_class += next.removed_rare_class;
  rare_class_names.insert(next.rare_class_names.begin(), next.rare_class_names.end());
  excluded_test_only += next.excluded_test_only;
  excluded_test_only_classes.insert(next.excluded_test_only_classes.begin(),
                                    next.excluded_test_only_classes.end());
  label_remap_count += next.label_remap_count;
  return *this;
}

nlohmann::json CleaningReport::to_json() const {
  return {
      {"input_count", input_count},
      {"output_count", output_count},
      {"removed_duplicates", removed_duplicates},
      {"removed_missing", removed_missing},
      {"removed_rare_class", {{"count", removed_rare_class}, {"classes", rare_class_names}}},
      {"excluded_test_only_classes",
       {{"count", excluded_test_only}, {"classes", excluded_test_only_classes}}},
      {"label_remap_count", label_remap_count},
  };
}

bool is_missing_value(std::string_view v) {
  static const std::unordered_set<std::string_view> kMissing = {
      "nan", "NaN", "NAN", "null", "NULL", "None", "N/A", "n/a", "NA", "<NA>"};
  return text::is_blank(v) || kMissing.contains(text::trim(v));
}

IngestResult ingest(const csv::Table& table, const IngestOptions& options) {
  const std::size_t text_col = table.column(options.text_column);
  const std::size_t label_col = table.column(options.label_column);
  const std::size_t id_col =
      options.id_column.empty() ? table.header.size() : table.column(options.id_column);

  IngestResult result;
  result.report.input_count = table.rows.size();
  std::unordered_set<std::string> seen_rows;
  std::unordered_set<std::string> seen_ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string& body = row[text_col];
    if (is_missing_value(body)) {
      ++result.report.removed_missing;
      continue;
    }
    const std::string& label = row[label_col];
    if (!seen_rows.insert(body + '\x1f' + label).second) {
      ++result.report.removed_duplicates;
      continue;
    }
    Complaint c;
    c.id = id_col < row.size() ? text::trim(row[id_col]) : make_id(options.id_prefix, r + 1);
    if (c.id.empty() || !seen_ids.insert(c.id).second) {
      throw IngestError("missing or repeated id \"" + c.id + "\"", r + 1);
    }
    c.text = body;
    if (!is_missing_value(label)) c.raw_category = text::trim(label);
    result.complaints.push_back(std::move(c));
  }
  result.report.output_count = result.complaints.size();
  return result;
}

IngestResult ingest_file(const std::filesystem::path& path, const IngestOptions& options) {
  return ingest(csv::read_file(path), options);
}

LabelPolicy LabelPolicy::from_json(const nlohmann::json& j) {
  LabelPolicy p;
  if (j.contains("rare_drop")) p.rare_drop = j.at("rare_drop").get<std::set<std::string>>();
  if (j.contains("test_only")) p.test_only = j.at("test_only").get<std::set<std::string>>();
  if (j.contains("min_samples_per_class")) {
    p.min_samples_per_class = j.at("min_samples_per_class").get<std::size_t>();
  }
  if (j.contains("aliases")) {
    for (const auto& [raw, target] : j.at("aliases").items()) {
      p.map.entries[raw] = require_category(target.get<std::string>());
    }
  }
  return p;
}

nlohmann::json LabelPolicy::to_json() const {
  nlohmann::json aliases = nlohmann::json::object();
  for (const auto& [raw, label] : map.entries) aliases[raw] = std::string(to_string(label));
  return {{"rare_drop", rare_drop},
          {"test_only", test_only},
          {"min_samples_per_class", min_samples_per_class},
          {"aliases", aliases}};
}

CleanResult standardize_labels(Complaints complaints, const LabelPolicy& policy,
                               Partition partition) {
  CleanResult result;
  result.report.input_count = complaints.size();
  Complaints kept;
  kept.reserve(complaints.size());
  for (auto& c : complaints) {
    if (!c.raw_category) {
      ++result.report.removed_missing;
      continue;
    }
    const std::string& raw = *c.raw_category;
    if (policy.rare_drop.contains(raw)) {
      ++result.report.removed_rare_class;
      result.report.rare_class_names.insert(raw);
      continue;
    }
    if (policy.test_only.contains(raw)) {
      ++result.report.excluded_test_only;
      result.report.excluded_test_only_classes.insert(raw);
      continue;
    }
    auto label = policy.map.lookup(raw);
    if (!label) throw UnknownLabelError(raw);
    if (to_string(*label) != raw) ++result.report.label_remap_count;
    c.category = label;
    kept.push_back(std::move(c));
  }

  if (partition == Partition::Train && policy.min_samples_per_class > 0) {
    std::map<CategoryLabel, std::size_t> counts;
    for (const auto& c : kept) ++counts[*c.category];
    std::erase_if(kept, [&](const Complaint& c) {
      if (counts[*c.category] >= policy.min_samples_per_class) return false;
      ++result.report.removed_rare_class;
      result.report.rare_class_names.insert(std::string(to_string(*c.category)));
      return true;
    });
  }
  result.complaints = std::move(kept);
  result.report.output_count = result.complaints.size();
  return result;
}

CleanResult clean(Complaints complaints) {
  CleanResult result;
  result.report.input_count = complaints.size();
  std::unordered_set<std::string> seen;
  for (auto& c : complaints) {
    if (text::is_blank(c.text)) {
      ++result.report.removed_missing;
      continue;
    }
    if (!seen.insert(text::normalized_key(c.text)).second) {
      ++result.report.removed_duplicates;
      continue;
    }
    result.complaints.push_back(std::move(c));
  }
  result.report.output_count = result.complaints.size();
  return result;
}

DatasetSplit split(const Complaints& pool, double validation_fraction, std::uint64_t seed,
                   Complaints test) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw PreconditionError("validation_fraction must be in [0, 1)");
  }
  std::map<CategoryLabel, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!pool[i].category) {
      throw PreconditionError("complaint " + pool[i].id + " has no category; standardize first");
    }
    by_class[*pool[i].category].push_back(i);
  }

  Rng rng(seed);
  std::vector<bool> in_validation(pool.size(), false);
  for (auto& [label, members] : by_class) {
    const std::size_t n = members.size();
    if (n < 2) {
      throw PreconditionError("class \"" + std::string(to_string(label)) + "\" has " +
                              std::to_string(n) + " sample; at least 2 are required");
    }
    std::size_t n_val = static_cast<std::size_t>(std::llround(validation_fraction * n));
    if (validation_fraction > 0.0) n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    rng.shuffle(members);
    for (std::size_t k = 0; k < n_val; ++k) in_validation[members[k]] = true;
  }

  DatasetSplit out;
  out.seed = seed;
  std::unordered_set<std::string> ids;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!ids.insert(pool[i].id).second) throw PreconditionError("duplicate id " + pool[i].id);
    (in_validation[i] ? out.validation : out.train).push_back(pool[i]);
  }
  for (const auto& c : test) {
    if (ids.contains(c.id)) throw PreconditionError("test id " + c.id + " also in training pool");
  }
  out.test = std::move(test);
  return out;
}

std::string complaints_to_csv(const Complaints& complaints) {
  std::ostringstream out;
  csv::write_row(out, kComplaintHeader);
  for (const auto& c : complaints) {
    csv::write_row(out, {c.id, c.text, c.raw_category.value_or(""),
                         c.category ? std::string(to_string(*c.category)) : std::string(),
                         std::string(to_string(c.source)), c.parent_id.value_or("")});
  }
  return out.str();
}

void write_complaints(const std::filesystem::path& path, const Complaints& complaints) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << complaints_to_csv(complaints);
}

Complaints read_complaints(const std::filesystem::path& path) {
  const auto table = csv::read_file(path);
  const std::size_t id = table.column("id");
  const std::size_t body = table.column("text");
  const std::size_t raw = table.column("raw_category");
  const std::size_t cat = table.column("category");
  const std::size_t src = table.column("source");
  const std::size_t parent = table.column("parent_id");
  Complaints out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    Complaint c;
    c.id = row[id];
    c.text = row[body];
    if (!row[raw].empty()) c.raw_category = row[raw];
    if (!row[cat].empty()) c.category = require_category(row[cat]);
    c.source = parse_source(row[src]);
    if (!row[parent].empty()) c.parent_id = row[parent];
    try {
      c.validate();
    } catch (const PreconditionError& e) {
      throw IngestError(e.what(), r + 1);
    }
    out.push_back(std::move(c));
  }
  return out;
}

void write_split(const std::filesystem::path& dir, const DatasetSplit& split) {
  std::filesystem::create_directories(dir);
  const std::pair<const char*, const Complaints*> parts[] = {
      {"train", &split.train}, {"validation", &split.validation}, {"test", &split.test}};
  nlohmann::json meta = {{"seed", split.seed}};
  for (const auto& [name, part] : parts) {
    write_complaints(dir / (std::string(name) + ".csv"), *part);
    std::ofstream ids(dir / (std::string(name) + ".ids"), std::ios::binary);
    for (const auto& c : *part) ids << c.id << '\n';
    meta["counts"][name] = part->size();
    meta["hashes"][name] = data_hash(*part);
  }
  std::ofstream(dir / "split.json") << meta.dump(2) << '\n';
}

DatasetSplit read_split(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "split.json")) {
    throw MissingArtifactError("no split.json in " + dir.string());
  }
  nlohmann::json meta;
  std::ifstream(dir / "split.json") >> meta;
  DatasetSplit s;
  s.seed = meta.value("seed", std::uint64_t{0});
  s.train = read_complaints(dir / "train.csv");
  s.validation = read_complaints(dir / "validation.csv");
  s.test = read_complaints(dir / "test.csv");
  return s;
}

std::string data_hash(const Complaints& complaints) {
  Sha256 h;
  for (const auto& c : complaints) {
    h.field(c.id).field(c.text).field(c.category ? to_string(*c.category) : "");
    h.field(to_string(c.source)).field(c.parent_id.value_or(""));
  }
  return h.hex();
}

}  // namespace triage::corpus
