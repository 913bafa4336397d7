#include "flowbench/common.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace flowbench {

FeatureMatrix FeatureMatrix::select_rows(std::span<const Index> rows) const {
  FeatureMatrix out;
  out.feature_names = feature_names;
  out.values.resize(static_cast<Index>(rows.size()), values.cols());
  out.labels.reserve(rows.size());
  if (has_attack_types()) out.attack_types.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i];
    out.values.row(static_cast<Index>(i)) = values.row(r);
    out.labels.push_back(labels[static_cast<std::size_t>(r)]);
    if (has_attack_types()) out.attack_types.push_back(attack_types[static_cast<std::size_t>(r)]);
  }
  return out;
}

FeatureMatrix FeatureMatrix::with_values(Matrix new_values, std::vector<std::string> names) const {
  if (new_values.rows() != values.rows()) {
    throw Error(fmt::format("row count changed from {} to {}", values.rows(), new_values.rows()));
  }
  FeatureMatrix out;
  out.values = std::move(new_values);
  out.feature_names = std::move(names);
  out.labels = labels;
  out.attack_types = attack_types;
  return out;
}

void FeatureMatrix::validate() const {
  if (static_cast<Index>(feature_names.size()) != values.cols()) {
    throw Error(fmt::format("{} feature names for {} columns", feature_names.size(), values.cols()));
  }
  if (static_cast<Index>(labels.size()) != values.rows()) {
    throw Error(fmt::format("{} labels for {} rows", labels.size(), values.rows()));
  }
  if (has_attack_types() && attack_types.size() != labels.size()) {
    throw Error("attack_types length does not match labels");
  }
  if (!values.allFinite()) throw Error("feature matrix contains non-finite values");
  if (std::any_of(labels.begin(), labels.end(), [](int y) { return y != 0 && y != 1; })) {
    throw Error("labels must be 0 or 1");
  }
}

std::size_t FeatureMatrix::count_label(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::vector<std::string> numbered_names(std::string_view prefix, Index count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) names.push_back(fmt::format("{}{}", prefix, i));
  return names;
}

}  // namespace flowbench
