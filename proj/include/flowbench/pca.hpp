#pragma once

#include "flowbench/common.hpp"

namespace flowbench {

/// Principal components from the SVD of the mean-centred training data.
/// Each component row is sign-normalised so its largest-magnitude entry is
/// positive.
struct PcaModel {
  Vector mean;                  // d
  Matrix components;            // k x d, orthonormal rows
  Vector singular_values;       // k, non-increasing
  Vector explained_variance;    // k, singular_values^2 / (n - 1)
  double total_variance = 0.0;  // sum of per-feature sample variances of the input
  Index samples = 0;

  Index input_dim() const { return mean.size(); }
  Index output_dim() const { return components.rows(); }
  Vector explained_variance_ratio() const;
};

/// Requires 1 <= k <= min(n - 1, d).
PcaModel pca_fit(const Matrix& train, Index k);
PcaModel pca_fit(const FeatureMatrix& train, Index k);

/// (X - mean) * components^T.
Matrix pca_transform(const Matrix& m, const PcaModel& model);
FeatureMatrix pca_transform(const FeatureMatrix& m, const PcaModel& model);

/// z * components + mean.
Matrix pca_inverse(const Matrix& z, const PcaModel& model);

}  // namespace flowbench
