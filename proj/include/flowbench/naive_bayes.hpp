#pragma once

#include "flowbench/common.hpp"

#include <array>
#include <iosfwd>

namespace flowbench {

/// Gaussian naive Bayes with per-class feature means and (population)
/// variances. `smoothing` = var_smoothing * max per-feature variance of the
/// whole training set, added to every variance.
struct GnbModel {
  std::array<double, 2> prior{0.5, 0.5};
  Matrix mean;      // 2 x d
  Matrix variance;  // 2 x d, smoothed
  double smoothing = 0.0;
};

inline constexpr double kGnbVarSmoothing = 1e-9;

GnbModel gnb_fit(const FeatureMatrix& train, double var_smoothing = kGnbVarSmoothing);

/// Per-row log joint likelihood log P(c) + log P(x | c), columns c = 0, 1.
Matrix gnb_joint_log_likelihood(const GnbModel& model, const Matrix& m);

/// P(class 1 | x), normalised in the log domain.
Vector gnb_score(const GnbModel& model, const Matrix& m);

void save_gnb(std::ostream& out, const GnbModel& model);
GnbModel load_gnb(std::istream& in);

}  // namespace flowbench
