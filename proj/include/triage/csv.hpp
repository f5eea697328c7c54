#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace triage::csv {

// RFC-4180 style: comma-delimited, double-quote quoting, "" escapes,
// quoted fields may span lines.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws ConfigError naming the column when it is missing.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

// Throws IngestError naming the 1-based data row on malformed input.
Table parse(std::istream& in);
Table read_file(const std::filesystem::path& path);

std::string quote(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);
void write(std::ostream& out, const Table& table);
void write_file(const std::filesystem::path& path, const Table& table);

}  // namespace triage::csv
