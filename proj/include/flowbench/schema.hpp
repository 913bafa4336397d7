#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowbench {

/// Declares how the columns of one raw flow dataset are treated.
///
/// The label cell maps to 1 when it equals `positive_token`. Datasets whose
/// label column carries attack names (CSE-CIC-IDS2018 uses "Benign" and one
/// name per attack) set `negative_token` instead, in which case every value
/// other than the negative token is an attack.
struct DatasetSchema {
  std::string name;
  std::vector<std::string> identifier_columns;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> boolean_columns;
  std::string label_column = "label";
  std::optional<std::string> attack_type_column;
  std::string positive_token = "1";
  std::optional<std::string> negative_token;

  /// Throws on overlapping column roles or an empty label column.
  void validate() const;

  bool is_attack(std::string_view label_cell) const;
};

/// Names accepted by builtin_schema().
std::vector<std::string> builtin_schema_names();

/// "unsw-nb15", "ton-iot", "cse-cic-ids2018" or "synthetic".
DatasetSchema builtin_schema(std::string_view name);

/// Reads a YAML key-value schema file (keys mirror the struct fields).
DatasetSchema load_schema(const std::string& path);
void save_schema(const DatasetSchema& schema, const std::string& path);

/// Built-in name if one matches, otherwise a schema file path.
DatasetSchema resolve_schema(const std::string& name_or_path);

}  // namespace flowbench
