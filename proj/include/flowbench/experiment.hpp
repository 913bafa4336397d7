#pragma once

#include "flowbench/classifier.hpp"
#include "flowbench/extractor.hpp"
#include "flowbench/metrics.hpp"
#include "flowbench/preprocess.hpp"
#include "flowbench/split.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flowbench {

struct TrainSettings {
  int epochs = 20;
  int batch_size = 256;
  double learning_rate = 1e-3;
};

inline constexpr int kConfigVersion = 1;

/// Experiment description, read from YAML:
///
///   version: 1
///   dataset: {path: flows.csv, schema: unsw-nb15, name: unsw}
///   fe: [full, pca, lda, ae]
///   dims: [1, 2, 3, 4, 5, 10, 20, 30]
///   models: [dff, cnn, rnn, dt, lr, nb]
///   folds: 5
///   seed: 7
///   subsample: 100000
///   train: {epochs: 20, batch_size: 256, learning_rate: 0.001}
///   autoencoder: {epochs: 20, batch_size: 256, learning_rate: 0.001}
///   output_dir: results
///
/// Optional keys: fit_global, jobs, threshold, svg, dff_dropout
/// (before_output | after_each_hidden), weight_shallow.
struct ExperimentConfig {
  int version = kConfigVersion;
  std::string dataset_path;
  std::string dataset_name;  // defaults to the file stem
  std::string schema_name;   // built-in name or schema file
  std::vector<FeMethod> fe_methods{FeMethod::full};
  std::vector<int> dimensions{1, 2, 3, 4, 5, 10, 20, 30};
  std::vector<ClassifierKind> models{ClassifierKind::dt};
  int folds = 5;
  std::uint64_t seed = 0;
  std::optional<std::size_t> subsample;
  TrainSettings train;
  TrainSettings autoencoder;
  DropoutPlacement dff_dropout = DropoutPlacement::before_output;
  bool weight_shallow = false;
  double threshold = kDefaultThreshold;
  std::string output_dir = "results";
  bool fit_global = false;
  int jobs = 1;
  bool svg = true;

  void validate() const;
};

ExperimentConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::string& path);

/// One point of the sweep. `dims` is the extracted width actually used:
/// the feature count for full, 1 for lda.
struct Cell {
  FeMethod fe = FeMethod::full;
  int dims = 0;
  ClassifierKind model = ClassifierKind::dt;

  std::string key(const std::string& dataset) const;
};

/// Cartesian product fe x dims x models in config order, with full and lda
/// collapsed to a single width. Throws if a requested width exceeds
/// `feature_count`.
std::vector<Cell> expand_cells(const ExperimentConfig& config, int feature_count);

struct ResultRecord {
  std::string dataset;
  std::string model;
  std::string fe;
  int dims = 0;
  std::string fold;  // fold index, or "mean"
  MetricSet m;
  double auc = 0.0;
  std::optional<double> pooled_auc;  // mean rows: AUC of all folds' predictions together
  ConfusionCounts counts;
  bool failed = false;
  std::string error;
  double wall_time_seconds = 0.0;

  bool is_mean() const { return fold == "mean"; }
};

/// Column order of results.csv. Wall time is kept out so that repeated
/// runs produce identical files; it goes to timings.csv.
void write_results_csv(std::ostream& out, std::span<const ResultRecord> records, bool with_wall_time = false);
std::vector<ResultRecord> read_results_csv(const std::string& path);

struct FoldData {
  FeatureMatrix train;
  FeatureMatrix test;
  ScalerModel scaler;
  ExtractorModel extractor;
};

/// Scales and extracts one fold. Statistics come from the training rows
/// only, or from every row when `fit_global` is set.
FoldData fit_fold(const FeatureMatrix& data, std::span<const Index> train_rows, std::span<const Index> test_rows,
                  FeMethod fe, int dims, const TrainSettings& ae, std::uint64_t ae_seed, bool fit_global);

struct DatasetVariance {
  std::string dataset;
  VarianceReport pca;
  std::optional<VarianceReport> lda;
};

struct RunOutput {
  std::vector<ResultRecord> records;
  std::map<std::string, AttackBreakdown> per_attack;  // by cell key
  std::vector<DatasetVariance> variance;
  std::size_t resumed_cells = 0;
};

/// Runs the sweep over an already prepared dataset. Completed cells found in
/// the output directory's manifest are loaded instead of recomputed.
RunOutput run(const ExperimentConfig& config, const std::string& dataset_name, const FeatureMatrix& data);

/// Loads the configured dataset, then runs the sweep.
RunOutput run(const ExperimentConfig& config);

}  // namespace flowbench
