#pragma once

#include "flowbench/experiment.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace flowbench {

/// Per (dataset, model, fe): the successful mean row with the highest AUC,
/// ties going to the smaller dimension count. Output follows first
/// appearance order in `records`.
std::vector<ResultRecord> best_per_model(std::span<const ResultRecord> records);

/// Best (model, fe, dims) mean row for each dataset.
std::vector<ResultRecord> best_per_dataset(std::span<const ResultRecord> records);

/// Writes sweeps/<dataset>_<model>_<fe>.csv (dims, auc), variance CSVs,
/// summary/cross_dataset.csv and, when `svg` is set, line and bar charts.
void emit_plots(std::span<const ResultRecord> records, std::span<const DatasetVariance> variance,
                const std::filesystem::path& output_dir, bool svg = true);

/// Text tables of the best rows per model and, when given, per-attack
/// detection rates of the best cell per dataset.
std::string render_summary(std::span<const ResultRecord> records,
                           const std::map<std::string, AttackBreakdown>& per_attack);

/// Writes summary.txt (and the cross-dataset files) for one or more run
/// directories. Returns the summary text.
std::string report(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_dir);

/// Writes per_attack.csv: attack_type, actual, detected, dr.
void write_per_attack_csv(const std::filesystem::path& path, const AttackBreakdown& breakdown);
AttackBreakdown read_per_attack_csv(const std::filesystem::path& path);

}  // namespace flowbench
