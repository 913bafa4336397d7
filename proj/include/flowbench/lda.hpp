#pragma once

#include "flowbench/common.hpp"

namespace flowbench {

/// Binary Fisher discriminant: one projection direction.
struct LdaModel {
  Vector projection;             // unit length, d
  Matrix class_means;            // 2 x d, row c = mean of class c
  double output_variance = 0.0;  // sample variance of the projected training rows
  bool zero_separation = false;  // class means coincide; projection is e0

  Index input_dim() const { return projection.size(); }
};

inline constexpr double kLdaRidge = 1e-6;

/// w proportional to (S_W + ridge * trace(S_W)/d * I)^-1 (mu1 - mu0), normalised to unit
/// length. Pass ridge = 0 for the unregularised solve.
LdaModel lda_fit(const FeatureMatrix& train, double ridge = kLdaRidge);

/// X * w^T (n x 1).
FeatureMatrix lda_transform(const FeatureMatrix& m, const LdaModel& model);
Vector lda_project(const Matrix& m, const LdaModel& model);

}  // namespace flowbench
