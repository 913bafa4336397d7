#pragma once

#include "flowbench/common.hpp"
#include "flowbench/csv.hpp"
#include "flowbench/schema.hpp"

#include <map>
#include <string>
#include <vector>

namespace flowbench {

/// Table without the schema's identifier columns; other columns keep order.
RawTable drop_identifiers(const RawTable& table, const DatasetSchema& schema);

/// Keeps the first occurrence of each distinct row (exact string cells).
RawTable deduplicate(const RawTable& table);

/// Per categorical column, category string -> integer code. Codes follow the
/// lexicographic (byte) order of the category strings.
struct EncoderMap {
  std::map<std::string, std::map<std::string, int>> columns;

  /// Code of `category` in `column`; unseen categories get the map size.
  int code(const std::string& column, const std::string& category) const;
};

EncoderMap fit_encoder(const RawTable& table, const DatasetSchema& schema);
RawTable apply_encoder(const RawTable& table, const EncoderMap& encoder);

struct EncodedTable {
  RawTable table;
  EncoderMap encoder;
};
EncodedTable encode_categoricals(const RawTable& table, const DatasetSchema& schema);

/// Parses one numeric cell. NaN, "-", empty and +/-infinity map to 0.
/// Returns nullopt for non-numeric residue.
std::optional<double> parse_numeric_cell(std::string_view cell);

/// Boolean token to 1/0; nullopt for an unrecognised token.
std::optional<double> parse_boolean_cell(std::string_view cell);

/// Converts an encoded table into a finite numeric FeatureMatrix. The label
/// and attack-type columns are removed from the features.
FeatureMatrix clean_values(const RawTable& table, const DatasetSchema& schema);

/// Per-feature min/max fitted on training rows.
struct ScalerModel {
  Vector min;
  Vector max;
};

ScalerModel fit_scaler(const FeatureMatrix& train);

/// (x - min) / (max - min), 0 for zero-range features, clipped to [0, 1].
FeatureMatrix apply_scaler(const FeatureMatrix& m, const ScalerModel& scaler);

struct PreparedData {
  FeatureMatrix data;
  EncoderMap encoder;
  std::size_t raw_rows = 0;
  std::size_t duplicates_removed = 0;
  std::vector<std::string> dropped_identifiers;
};

/// drop_identifiers -> deduplicate -> encode_categoricals -> clean_values.
/// Scaling is left to the caller so it can be fitted per training fold.
PreparedData prepare(const RawTable& table, const DatasetSchema& schema);
PreparedData prepare_file(const std::string& path, const DatasetSchema& schema);

/// Header = feature names, then label and attack_type.
void write_feature_matrix(const FeatureMatrix& m, const std::string& path);

}  // namespace flowbench
