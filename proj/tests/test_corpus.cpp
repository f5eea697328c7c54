#include <doctest.h>

#include <sstream>

#include "triage/corpus.hpp"
#include "triage/errors.hpp"

using namespace triage;
using namespace triage::corpus;

namespace {

csv::Table table_of(const std::string& body) {
  std::istringstream in(body);
  return csv::parse(in);
}

Complaint labelled(std::string id, std::string text, CategoryLabel label) {
  Complaint c;
  c.id = std::move(id);
  c.text = std::move(text);
  c.category = label;
  c.raw_category = std::string(to_string(label));
  return c;
}

Complaints class_block(CategoryLabel label, int n, const std::string& prefix) {
  Complaints out;
  for (int i = 0; i < n; ++i) {
    out.push_back(labelled(prefix + std::to_string(i), prefix + " text " + std::to_string(i), label));
  }
  return out;
}

}  // namespace

TEST_CASE("csv parser handles quotes, embedded newlines and CRLF") {
  auto t = table_of("text,label\r\n\"a, \"\"b\"\"\nc\",X\r\nplain,Y\n\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "a, \"b\"\nc");
  CHECK(t.rows[1][1] == "Y");
  CHECK_THROWS_AS(table_of("text,label\n\"open,X\n"), IngestError);
  CHECK_THROWS_AS(table_of("text,label\na,b,c\n"), IngestError);
}

TEST_CASE("csv write/parse round-trips arbitrary fields") {
  csv::Table t{{"a", "b"}, {{"x,y", "say \"hi\""}, {" lead", "multi\nline"}}};
  std::ostringstream out;
  csv::write(out, t);
  std::istringstream in(out.str());
  auto back = csv::parse(in);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
}

TEST_CASE("ingest carries fields and counts missing and duplicate rows") {
  auto t = table_of(
      "text,label\n"
      "fraud hua mere account se,Online Financial Fraud\n"
      "NaN,Ransomware\n"
      "same,Ransomware\nsame,Ransomware\nsame,Ransomware\n");
  auto r = ingest(t);
  REQUIRE(r.complaints.size() == 2);
  CHECK(r.complaints[0].raw_category == "Online Financial Fraud");
  CHECK(r.complaints[0].text == "fraud hua mere account se");
  CHECK(r.report.removed_missing == 1);
  CHECK(r.report.removed_duplicates == 2);
  CHECK(r.report.reconciles());
}

TEST_CASE("ingest rejects unknown configured columns") {
  auto t = table_of("body,label\nx,y\n");
  CHECK_THROWS_AS(ingest(t), ConfigError);
  IngestOptions opt;
  opt.text_column = "body";
  CHECK(ingest(t, opt).complaints.size() == 1);
}

TEST_CASE("standard label map is total over the 14 source categories") {
  const auto map = LabelMap::standard();
  CHECK(map.entries.size() == 14);
  std::set<CategoryLabel> targets;
  for (const auto& [raw, label] : map.entries) targets.insert(label);
  CHECK(targets.size() == kNumCategories);
}

TEST_CASE("standardize_labels maps, drops and fails loudly") {
  auto mk = [](std::string id, std::string raw) {
    Complaint c;
    c.id = std::move(id);
    c.text = "t" + c.id;
    c.raw_category = std::move(raw);
    return c;
  };
  LabelPolicy policy;
  policy.min_samples_per_class = 0;

  auto r = standardize_labels({mk("1", "Online Financial Fraud"),
                               mk("2", "Child Pornography CPChild Sexual Abuse Material CSAM"),
                               mk("3", "Report Unlawful Content")},
                              policy);
  REQUIRE(r.complaints.size() == 2);
  CHECK(r.complaints[0].category == CategoryLabel::FinancialFraud);
  CHECK(r.complaints[1].category == CategoryLabel::ChildAbuseMaterial);
  CHECK(r.report.removed_rare_class == 1);
  CHECK(r.report.label_remap_count == 2);
  CHECK(r.report.reconciles());

  auto test = standardize_labels({mk("4", "Crime Against Women & Children")}, policy,
                                 Partition::Test);
  CHECK(test.complaints.empty());
  CHECK(test.report.excluded_test_only_classes.contains("Crime Against Women & Children"));

  try {
    standardize_labels({mk("5", "Mystery Crime")}, policy);
    FAIL("expected UnknownLabelError");
  } catch (const UnknownLabelError& e) {
    CHECK(e.label() == "Mystery Crime");
  }
}

TEST_CASE("standardize_labels drops training classes under the sample floor") {
  Complaints in = class_block(CategoryLabel::Ransomware, 1, "r");
  auto more = class_block(CategoryLabel::FinancialFraud, 3, "f");
  in.insert(in.end(), more.begin(), more.end());
  auto r = standardize_labels(in, LabelPolicy{});
  CHECK(r.complaints.size() == 3);
  CHECK(r.report.rare_class_names.contains("Ransomware"));
  CHECK(r.report.reconciles());
}

TEST_CASE("clean dedups normalized text and drops blanks") {
  auto mk = [](std::string id, std::string text) {
    Complaint c;
    c.id = std::move(id);
    c.text = std::move(text);
    return c;
  };
  auto r = clean({mk("1", "abc"), mk("2", "abc"), mk("3", "xyz")});
  REQUIRE(r.complaints.size() == 2);
  CHECK(r.complaints[1].text == "xyz");

  auto blanks = clean({mk("1", "  "), mk("2", "ok")});
  REQUIRE(blanks.complaints.size() == 1);
  CHECK(blanks.complaints[0].text == "ok");

  auto empty = clean({});
  CHECK(empty.complaints.empty());
  CHECK(empty.report.total_removed() == 0);

  auto folded = clean({mk("1", "Paise  GAYE"), mk("2", "paise gaye "), mk("3", "other")});
  CHECK(folded.complaints.size() == 2);
  auto again = clean(folded.complaints);
  CHECK(again.complaints.size() == folded.complaints.size());
  CHECK(again.report.total_removed() == 0);
  CHECK(r.report.reconciles());
}

TEST_CASE("split is stratified, deterministic and disjoint") {
  auto pool = class_block(CategoryLabel::Ransomware, 10, "r");
  auto s = split(pool, 0.2, 7);
  CHECK(s.train.size() == 8);
  CHECK(s.validation.size() == 2);
  auto s2 = split(pool, 0.2, 7);
  CHECK(complaints_to_csv(s.train) == complaints_to_csv(s2.train));
  CHECK(complaints_to_csv(s.validation) == complaints_to_csv(s2.validation));

  CHECK_THROWS_AS(split(class_block(CategoryLabel::Ransomware, 1, "x"), 0.2, 7), PreconditionError);
}

TEST_CASE("split invariants hold over many class mixes") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Complaints pool;
    for (std::size_t k = 0; k < 5; ++k) {
      auto block = class_block(static_cast<CategoryLabel>(k), 2 + static_cast<int>((seed * 7 + k * 13) % 60),
                               "s" + std::to_string(k) + "-");
      pool.insert(pool.end(), block.begin(), block.end());
    }
    auto s = split(pool, 0.2, seed);
    std::set<std::string> train_ids, val_ids;
    for (const auto& c : s.train) train_ids.insert(c.id);
    for (const auto& c : s.validation) {
      CHECK_FALSE(train_ids.contains(c.id));
      val_ids.insert(c.id);
    }
    CHECK(train_ids.size() + val_ids.size() == pool.size());
    std::map<CategoryLabel, int> n_train, n_val;
    for (const auto& c : s.train) ++n_train[*c.category];
    for (const auto& c : s.validation) ++n_val[*c.category];
    for (const auto& [label, v] : n_val) {
      CHECK(n_train[label] > 0);
      const double n = n_train[label] + v;
      CHECK(std::abs(v - 0.2 * n) <= 1.0);
    }
  }
}

TEST_CASE("split directory round-trip preserves partitions") {
  auto pool = class_block(CategoryLabel::CyberTerrorism, 6, "t");
  pool[0].text = "comma, \"quoted\"\nnewline";
  auto s = split(pool, 0.2, 3, class_block(CategoryLabel::CyberTerrorism, 2, "test"));
  auto dir = std::filesystem::temp_directory_path() / "triage_split_rt";
  std::filesystem::remove_all(dir);
  write_split(dir, s);
  auto back = read_split(dir);
  CHECK(data_hash(back.train) == data_hash(s.train));
  CHECK(data_hash(back.validation) == data_hash(s.validation));
  CHECK(data_hash(back.test) == data_hash(s.test));
  CHECK(back.seed == 3);
  std::filesystem::remove_all(dir);
}
