#pragma once

#include "flowbench/schema.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowbench {

/// String cells with named columns, row order as read.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column_index(std::string_view name) const;
  std::size_t require_column(std::string_view name) const;
  std::size_t row_count() const { return rows.size(); }
};

/// Splits one CSV record. Handles double-quote quoting with "" escapes.
std::vector<std::string> split_csv_record(std::string_view line);

/// Quotes a cell only when it contains a comma, quote or newline.
std::string csv_escape(std::string_view cell);

/// Reads a comma-separated file whose first record is the header.
/// Ragged rows raise an Error naming the 1-based data row.
RawTable read_csv(const std::string& path);
RawTable read_csv(std::istream& in, std::string_view source = "<stream>");

void write_csv(const RawTable& table, std::ostream& out);

/// read_csv plus a check that every column the schema needs is present.
/// Identifier columns are optional since they are dropped anyway.
RawTable load_csv(const std::string& path, const DatasetSchema& schema);
void check_schema_columns(const RawTable& table, const DatasetSchema& schema);

}  // namespace flowbench
