#pragma once

#include "flowbench/common.hpp"
#include "flowbench/split.hpp"

#include <iosfwd>
#include <optional>

namespace flowbench {

struct LrOptions {
  double c = 1.0;          // inverse regularisation strength
  double tolerance = 1e-4;  // max-norm of the gradient at convergence
  int max_iterations = 100;
  int history = 10;
};

struct LrModel {
  Vector weights;
  double bias = 0.0;
  double c = 1.0;
  bool converged = false;
  int iterations_used = 0;
};

/// Objective 0.5*|w|^2 + C * sum_i omega_i * log(1 + exp(-y_i (w.x_i + b))),
/// y in {-1, +1}; the bias is not penalised. Gradient is laid out as [w, b].
struct LrObjective {
  double value = 0.0;
  Vector gradient;
};
LrObjective lr_objective(const Matrix& x, std::span<const int> labels, const Vector& sample_weights,
                         const Vector& weights, double bias, double c);

/// Limited-memory BFGS with Armijo backtracking. Stops when the gradient
/// max-norm drops to options.tolerance or after options.max_iterations.
LrModel lr_fit(const FeatureMatrix& train, std::optional<ClassWeights> class_weights = std::nullopt,
               const LrOptions& options = {});

Vector lr_score(const LrModel& model, const Matrix& m);

void save_lr(std::ostream& out, const LrModel& model);
LrModel load_lr(std::istream& in);

}  // namespace flowbench
