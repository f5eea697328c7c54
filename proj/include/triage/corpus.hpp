#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "triage/complaint.hpp"
#include "triage/csv.hpp"
#include "triage/labels.hpp"

namespace triage::corpus {

// Audit trail for every row dropped between ingestion and splitting.
struct CleaningReport {
  std::size_t input_count = 0;
  std::size_t output_count = 0;
  std::size_t removed_duplicates = 0;
  std::size_t removed_missing = 0;
  std::size_t removed_rare_class = 0;
  std::set<std::string> rare_class_names;
  std::size_t excluded_test_only = 0;
  std::set<std::string> excluded_test_only_classes;
  std::size_t label_remap_count = 0;

  std::size_t total_removed() const {
    return removed_duplicates + removed_missing + removed_rare_class + excluded_test_only;
  }
  bool reconciles() const { return input_count - output_count == total_removed(); }

  // Chains a later stage: input stays, output and counters accumulate.
  CleaningReport& then(const CleaningReport& next);
  nlohmann::json to_json() const;
};

struct IngestOptions {
  std::string text_column = "text";
  std::string label_column = "label";
  std::string id_column;  // empty: ids are generated from the row number
  std::string id_prefix = "c";
};

// Values treated as missing, mirroring the usual dataframe NaN markers.
bool is_missing_value(std::string_view v);

struct IngestResult {
  Complaints complaints;
  CleaningReport report;
};

// One complaint per row; missing text and exact duplicate rows are counted
// and dropped. Unknown configured columns raise ConfigError.
IngestResult ingest(const csv::Table& table, const IngestOptions& options = {});
IngestResult ingest_file(const std::filesystem::path& path, const IngestOptions& options = {});

enum class Partition { Train, Test };

struct LabelPolicy {
  LabelMap map = LabelMap::standard();
  // Raw labels removed as too rare to split (counted as rare).
  std::set<std::string> rare_drop{"Report Unlawful Content"};
  // Raw labels that only occur in the test set (excluded from evaluation).
  std::set<std::string> test_only{"Crime Against Women & Children"};
  // Training classes with fewer samples than this are removed as rare.
  std::size_t min_samples_per_class = 2;

  static LabelPolicy from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct CleanResult {
  Complaints complaints;
  CleaningReport report;
};

// Sets `category` from `raw_category`. Unmapped labels that are not on a
// drop list raise UnknownLabelError.
CleanResult standardize_labels(Complaints complaints, const LabelPolicy& policy,
                               Partition partition = Partition::Train);

// Drops blank texts and normalized-text duplicates (first occurrence wins).
CleanResult clean(Complaints complaints);

struct DatasetSplit {
  Complaints train;
  Complaints validation;
  Complaints test;
  std::uint64_t seed = 0;
};

// Stratified, deterministic in `seed`. Every class needs at least 2 samples.
DatasetSplit split(const Complaints& pool, double validation_fraction, std::uint64_t seed,
                   Complaints test = {});

// Canonical inter-stage complaint file (id,text,raw_category,category,source,parent_id).
void write_complaints(const std::filesystem::path& path, const Complaints& complaints);
Complaints read_complaints(const std::filesystem::path& path);
std::string complaints_to_csv(const Complaints& complaints);

// Split directory: {train,validation,test}.csv + matching .ids manifests + split.json.
void write_split(const std::filesystem::path& dir, const DatasetSplit& split);
DatasetSplit read_split(const std::filesystem::path& dir);

// Content hash over ids, texts and labels; stable across runs.
std::string data_hash(const Complaints& complaints);

}  // namespace triage::corpus
