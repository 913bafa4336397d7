#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flowbench {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

/// Every recoverable failure in the library is reported with this type.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Stable 64-bit FNV-1a; used to derive per-cell seeds that do not depend on
/// the standard library's std::hash.
inline std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Numeric sample matrix with binary labels and optional attack-type tags.
struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> feature_names;
  std::vector<int> labels;
  std::vector<std::string> attack_types;  // empty when the source has none

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  bool has_attack_types() const { return !attack_types.empty(); }

  /// Copy of the given rows, in the given order.
  FeatureMatrix select_rows(std::span<const Index> rows) const;

  /// Same rows/labels/tags with replacement feature values.
  FeatureMatrix with_values(Matrix new_values, std::vector<std::string> names) const;

  /// Throws if any structural invariant is broken (shape, finiteness, labels).
  void validate() const;

  std::size_t count_label(int label) const;
};

std::vector<std::string> numbered_names(std::string_view prefix, Index count);

}  // namespace flowbench
