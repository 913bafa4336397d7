#pragma once

#include "flowbench/autoencoder.hpp"
#include "flowbench/lda.hpp"
#include "flowbench/pca.hpp"

#include <iosfwd>
#include <string>
#include <variant>

namespace flowbench {

enum class FeMethod { full, pca, lda, ae };

std::string to_string(FeMethod method);
FeMethod parse_fe_method(std::string_view name);

/// std::monostate stands for the identity extractor used by FeMethod::full.
using ExtractorModel = std::variant<std::monostate, PcaModel, LdaModel, AeModel>;

/// `dims` is ignored by full (all features) and lda (always 1).
ExtractorModel fit_extractor(FeMethod method, const FeatureMatrix& train, int dims,
                             const nn::TrainConfig& ae_config);
FeatureMatrix apply_extractor(const ExtractorModel& model, const FeatureMatrix& m);

/// Dimension count the extractor emits for an input of width `input_dim`.
int extracted_dims(FeMethod method, int dims, int input_dim);

void save_extractor(std::ostream& out, const ExtractorModel& model);
ExtractorModel load_extractor(std::istream& in);

enum class VarianceMethod { pca, lda };

/// Per-dimension sample variance of extracted data. For PCA the cumulative
/// fraction of `total_input_variance` is filled in as well.
struct VarianceReport {
  VarianceMethod method = VarianceMethod::pca;
  Vector variance;
  Vector cumulative_fraction;  // empty for LDA
};

VarianceReport variance_report(const Matrix& extracted, VarianceMethod method, double total_input_variance = 0.0);
VarianceReport variance_report(const FeatureMatrix& extracted, VarianceMethod method,
                               double total_input_variance = 0.0);

/// Two-column CSV: dimension_index, variance (1-based dimension index).
void write_variance_csv(const VarianceReport& report, const std::string& path);

}  // namespace flowbench
