#include "flowbench/preprocess.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cctype>
#include <fstream>
#include <limits>
#include <set>
#include <unordered_set>

namespace flowbench {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct RowHash {
  std::size_t operator()(const std::vector<std::string>* row) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& cell : *row) {
      h = fnv1a(cell, h);
      h = fnv1a(std::string_view("\x1f", 1), h);
    }
    return static_cast<std::size_t>(h);
  }
};

struct RowEq {
  bool operator()(const std::vector<std::string>* a, const std::vector<std::string>* b) const {
    return *a == *b;
  }
};

}  // namespace

RawTable drop_identifiers(const RawTable& table, const DatasetSchema& schema) {
  std::vector<std::size_t> keep;
  const std::set<std::string> ids(schema.identifier_columns.begin(), schema.identifier_columns.end());
  for (const auto& id : ids) {
    if (!table.column_index(id)) spdlog::debug("identifier column '{}' not present, skipped", id);
  }
  RawTable out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (ids.count(table.columns[c]) == 0) {
      keep.push_back(c);
      out.columns.push_back(table.columns[c]);
    }
  }
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    std::vector<std::string> r;
    r.reserve(keep.size());
    for (auto c : keep) r.push_back(row[c]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

RawTable deduplicate(const RawTable& table) {
  RawTable out;
  out.columns = table.columns;
  std::unordered_set<const std::vector<std::string>*, RowHash, RowEq> seen;
  seen.reserve(table.rows.size());
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (seen.insert(&table.rows[i]).second) kept.push_back(i);
  }
  out.rows.reserve(kept.size());
  for (auto i : kept) out.rows.push_back(table.rows[i]);
  return out;
}

int EncoderMap::code(const std::string& column, const std::string& category) const {
  const auto col = columns.find(column);
  if (col == columns.end()) throw Error(fmt::format("no encoder for column '{}'", column));
  const auto it = col->second.find(category);
  if (it == col->second.end()) return static_cast<int>(col->second.size());
  return it->second;
}

EncoderMap fit_encoder(const RawTable& table, const DatasetSchema& schema) {
  EncoderMap enc;
  for (const auto& column : schema.categorical_columns) {
    const auto c = table.require_column(column);
    std::set<std::string> categories;
    for (const auto& row : table.rows) categories.insert(row[c]);
    auto& map = enc.columns[column];
    int next = 0;
    for (const auto& cat : categories) map.emplace(cat, next++);
  }
  return enc;
}

RawTable apply_encoder(const RawTable& table, const EncoderMap& encoder) {
  RawTable out = table;
  for (const auto& [column, map] : encoder.columns) {
    const auto c = out.require_column(column);
    for (auto& row : out.rows) row[c] = std::to_string(encoder.code(column, row[c]));
  }
  return out;
}

EncodedTable encode_categoricals(const RawTable& table, const DatasetSchema& schema) {
  EncodedTable out;
  out.encoder = fit_encoder(table, schema);
  out.table = apply_encoder(table, out.encoder);
  return out;
}

std::optional<double> parse_numeric_cell(std::string_view raw) {
  std::string_view cell = trim(raw);
  if (cell.empty() || cell == "-") return 0.0;
  const std::string low = lower(cell);
  if (low == "nan" || low == "-nan" || low == "inf" || low == "-inf" || low == "+inf" ||
      low == "infinity" || low == "-infinity" || low == "+infinity") {
    return 0.0;
  }
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec == std::errc::result_out_of_range) return 0.0;
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    // Hexadecimal integers show up in some exports (e.g. ports as 0x0303).
    if (cell.size() > 2 && cell[0] == '0' && (cell[1] == 'x' || cell[1] == 'X')) {
      unsigned long long h = 0;
      const auto r = std::from_chars(cell.data() + 2, cell.data() + cell.size(), h, 16);
      if (r.ec == std::errc() && r.ptr == cell.data() + cell.size()) return static_cast<double>(h);
    }
    return std::nullopt;
  }
  if (!std::isfinite(value)) return 0.0;
  return value;
}

std::optional<double> parse_boolean_cell(std::string_view raw) {
  const std::string low = lower(trim(raw));
  if (low == "t" || low == "true" || low == "yes" || low == "y") return 1.0;
  if (low == "f" || low == "false" || low == "no" || low == "n" || low.empty() || low == "-" ||
      low == "nan") {
    return 0.0;
  }
  if (auto v = parse_numeric_cell(low)) return *v != 0.0 ? 1.0 : 0.0;
  return std::nullopt;
}

FeatureMatrix clean_values(const RawTable& table, const DatasetSchema& schema) {
  const auto label_col = table.require_column(schema.label_column);
  std::optional<std::size_t> attack_col;
  if (schema.attack_type_column) attack_col = table.require_column(*schema.attack_type_column);
  const std::set<std::string> booleans(schema.boolean_columns.begin(), schema.boolean_columns.end());

  std::vector<std::size_t> feature_cols;
  FeatureMatrix m;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c == label_col || (attack_col && c == *attack_col)) continue;
    feature_cols.push_back(c);
    m.feature_names.push_back(table.columns[c]);
  }

  const auto n = static_cast<Index>(table.rows.size());
  m.values.resize(n, static_cast<Index>(feature_cols.size()));
  m.labels.reserve(table.rows.size());
  if (attack_col) m.attack_types.reserve(table.rows.size());

  for (Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const auto c = feature_cols[j];
      const bool is_bool = booleans.count(table.columns[c]) != 0;
      const auto v = is_bool ? parse_boolean_cell(row[c]) : parse_numeric_cell(row[c]);
      if (!v) {
        throw Error(fmt::format("non-numeric value '{}' at row {}, column '{}'", row[c], r + 1,
                                table.columns[c]));
      }
      m.values(r, static_cast<Index>(j)) = *v;
    }
    const std::string_view label = trim(row[label_col]);
    m.labels.push_back(schema.is_attack(label) ? 1 : 0);
    if (attack_col) {
      std::string tag(trim(row[*attack_col]));
      if (m.labels.back() == 0) tag = "benign";
      else if (tag.empty() || tag == "-") tag = "unknown";
      m.attack_types.push_back(std::move(tag));
    }
  }
  m.validate();
  return m;
}

ScalerModel fit_scaler(const FeatureMatrix& train) {
  if (train.rows() == 0) throw Error("fit_scaler: empty training matrix");
  return ScalerModel{train.values.colwise().minCoeff().transpose(),
                     train.values.colwise().maxCoeff().transpose()};
}

FeatureMatrix apply_scaler(const FeatureMatrix& m, const ScalerModel& scaler) {
  if (m.cols() != scaler.min.size()) {
    throw Error(fmt::format("scaler fitted on {} features, got {}", scaler.min.size(), m.cols()));
  }
  Matrix out(m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    const double lo = scaler.min(j);
    const double range = scaler.max(j) - lo;
    if (range <= 0.0) {
      out.col(j).setZero();
      continue;
    }
    out.col(j) = ((m.values.col(j).array() - lo) / range).cwiseMax(0.0).cwiseMin(1.0).matrix();
  }
  return m.with_values(std::move(out), m.feature_names);
}

PreparedData prepare(const RawTable& table, const DatasetSchema& schema) {
  check_schema_columns(table, schema);
  PreparedData out;
  out.raw_rows = table.row_count();
  for (const auto& id : schema.identifier_columns) {
    if (table.column_index(id)) out.dropped_identifiers.push_back(id);
  }
  const RawTable unique = deduplicate(drop_identifiers(table, schema));
  out.duplicates_removed = table.row_count() - unique.row_count();
  auto encoded = encode_categoricals(unique, schema);
  out.encoder = std::move(encoded.encoder);
  out.data = clean_values(encoded.table, schema);
  return out;
}

PreparedData prepare_file(const std::string& path, const DatasetSchema& schema) {
  return prepare(load_csv(path, schema), schema);
}

void write_feature_matrix(const FeatureMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path));
  for (const auto& name : m.feature_names) out << csv_escape(name) << ',';
  out << "label,attack_type\n";
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index j = 0; j < m.cols(); ++j) out << fmt::format("{}", m.values(r, j)) << ',';
    out << m.labels[static_cast<std::size_t>(r)] << ',';
    if (m.has_attack_types()) out << csv_escape(m.attack_types[static_cast<std::size_t>(r)]);
    out << '\n';
  }
}

}  // namespace flowbench
