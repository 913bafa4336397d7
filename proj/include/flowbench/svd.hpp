#pragma once

#include "flowbench/common.hpp"

namespace flowbench {

/// Singular values (non-increasing) and the matching right singular vectors
/// as columns of `right_vectors` (d x d).
struct SvdResult {
  Vector singular_values;
  Matrix right_vectors;
};

/// One-sided (Hestenes) Jacobi SVD. Tall inputs are first reduced to their
/// d x d triangular factor by a Householder QR, which leaves the singular
/// values and right vectors unchanged.
SvdResult jacobi_svd(const Matrix& a, double tolerance = 1e-15, int max_sweeps = 80);

}  // namespace flowbench
