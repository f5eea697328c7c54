#include "triage/csv.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "triage/errors.hpp"

namespace triage::csv {

std::size_t Table::column(std::string_view name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("unknown column \"" + std::string(name) + "\"");
  return static_cast<std::size_t>(it - header.begin());
}

bool Table::has_column(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

Table parse(std::istream& in) {
  Table table;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool any_char = false;
  std::size_t record_index = 0;  // 0 is the header

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    if (record_index == 0) {
      // Strip a UTF-8 byte order mark from the first header cell.
      if (!record.empty() && record[0].rfind("\xEF\xBB\xBF", 0) == 0) record[0].erase(0, 3);
      table.header = std::move(record);
    } else {
      if (record.size() != table.header.size()) {
        throw IngestError("expected " + std::to_string(table.header.size()) + " fields, got " +
                              std::to_string(record.size()),
                          record_index);
      }
      table.rows.push_back(std::move(record));
    }
    record.clear();
    ++record_index;
    any_char = false;
  };

  char c = 0;
  while (in.get(c)) {
    any_char = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw IngestError("stray quote inside unquoted field", record_index);
        }
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        if (record.empty() && field.empty() && !field_was_quoted) {
          any_char = false;  // blank line
          break;
        }
        end_record();
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) throw IngestError("unterminated quoted field", record_index);
  if (any_char && !(record.empty() && field.empty() && !field_was_quoted)) end_record();
  if (record_index == 0) throw IngestError("missing header row", 0);
  return table;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string(), 0);
  return parse(in);
}

std::string quote(std::string_view field) {
  const bool needs = field.find_first_of(",\"\n\r") != std::string_view::npos ||
                     (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << '\n';
}

void write(std::ostream& out, const Table& table) {
  write_row(out, table.header);
  for (const auto& row : table.rows) write_row(out, row);
}

void write_file(const std::filesystem::path& path, const Table& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write(out, table);
}

}  // namespace triage::csv
