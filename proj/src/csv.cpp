#include "flowbench/csv.hpp"

#include "flowbench/common.hpp"

#include <fmt/format.h>

#include <fstream>
#include <istream>
#include <ostream>

namespace flowbench {

std::optional<std::size_t> RawTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t RawTable::require_column(std::string_view name) const {
  if (auto idx = column_index(name)) return *idx;
  throw Error(fmt::format("missing column '{}'", name));
}

std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string csv_escape(std::string_view cell) {
  if (cell.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(cell);
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

// Pulls one logical record, joining physical lines while a quote is open.
bool next_record(std::istream& in, std::string& record) {
  record.clear();
  std::string line;
  bool any = false;
  while (std::getline(in, line)) {
    any = true;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!record.empty()) record.push_back('\n');
    record += line;
    std::size_t quotes = 0;
    for (char c : record) quotes += (c == '"');
    if (quotes % 2 == 0) return true;
  }
  return any;
}

}  // namespace

RawTable read_csv(std::istream& in, std::string_view source) {
  RawTable table;
  std::string record;
  if (!next_record(in, record)) throw Error(fmt::format("{}: empty file", source));
  if (record.size() >= 3 && record.compare(0, 3, "\xEF\xBB\xBF") == 0) record.erase(0, 3);
  table.columns = split_csv_record(record);
  for (auto& c : table.columns) {
    while (!c.empty() && c.front() == ' ') c.erase(c.begin());
    while (!c.empty() && c.back() == ' ') c.pop_back();
  }
  std::size_t row = 0;
  while (next_record(in, record)) {
    ++row;
    if (record.empty()) continue;
    auto cells = split_csv_record(record);
    if (cells.size() != table.columns.size()) {
      throw Error(fmt::format("{}: row {} has {} cells, header has {}", source, row, cells.size(),
                              table.columns.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

RawTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path));
  return read_csv(in, path);
}

void write_csv(const RawTable& table, std::ostream& out) {
  auto write_record = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << csv_escape(cells[i]);
    }
    out << '\n';
  };
  write_record(table.columns);
  for (const auto& r : table.rows) write_record(r);
}

void check_schema_columns(const RawTable& table, const DatasetSchema& schema) {
  auto need = [&](const std::string& column) {
    if (!table.column_index(column)) {
      throw Error(fmt::format("schema '{}' declares column '{}' which the file lacks", schema.name, column));
    }
  };
  need(schema.label_column);
  if (schema.attack_type_column) need(*schema.attack_type_column);
  for (const auto& c : schema.categorical_columns) need(c);
  for (const auto& c : schema.boolean_columns) need(c);
}

RawTable load_csv(const std::string& path, const DatasetSchema& schema) {
  RawTable table = read_csv(path);
  check_schema_columns(table, schema);
  return table;
}

}  // namespace flowbench
