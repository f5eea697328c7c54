#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "triage/anonymizer.hpp"
#include "triage/complaint.hpp"
#include "triage/corpus.hpp"
#include "triage/csv.hpp"
#include "triage/labels.hpp"

// Synthetic data used by the smoke pipeline, tests and the acceptance suite.
namespace triage::synth {

struct PiiText {
  std::string text;
  std::vector<anon::EntityMatch> embedded;  // pattern-kind entities, exact byte ranges
};

// Code-mixed complaint sentences with embedded emails, phones (optional
// +91/0 prefix and separators) and URLs (scheme-optional, common TLDs).
std::vector<PiiText> pii_texts(std::size_t n, std::uint64_t seed);

struct SmokeOptions {
  std::vector<CategoryLabel> classes;  // empty: a default 4-class set
  std::size_t per_class = 120;
  std::uint64_t seed = 2024;
  bool with_pii = true;  // sprinkle names, phones, amounts into the texts
};

// Separable corpus: each class has its own Hinglish vocabulary plus shared
// filler. Rows carry the verbose source labels (pre-standardization).
Complaints separable_corpus(const SmokeOptions& options);

// Overlap corpus: every class uses the same multiset of event phrases and
// differs only in which event is narrated first. A bag-of-words model sees
// identical feature distributions across classes.
Complaints order_corpus(const SmokeOptions& options);

// Already-standardized corpus with exactly counts[c] unique complaints per
// class, 9 to 14 words each, no PII. Ids are "b-0000001"...
Complaints sized_corpus(const std::map<CategoryLabel, std::size_t>& counts, std::uint64_t seed);

// Standardizes labels and carves a stratified train/validation/test split.
corpus::DatasetSplit smoke_split(const Complaints& raw, double validation_fraction,
                                 double test_fraction, std::uint64_t seed);

struct RawDataset {
  csv::Table train;
  csv::Table test;
};

// Imbalanced 6-class raw files (columns crimeaditionalinfo, category) with
// the defects found in the wild: missing texts, exact duplicate rows, a
// drop-listed class in train and a test-only class in test.
RawDataset raw_smoke_dataset(std::uint64_t seed = 2024);
std::map<CategoryLabel, std::size_t> raw_smoke_counts();

// Source-label string for a standardized category (inverse of the label map).
std::string source_label(CategoryLabel label);

}  // namespace triage::synth
