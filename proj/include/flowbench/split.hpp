#pragma once

#include "flowbench/common.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace flowbench {

struct TrainTestSplit {
  std::vector<Index> train;
  std::vector<Index> test;
};

/// Per-class shuffle, then round(n_c * test_fraction) rows of each class go to
/// the test side. Index lists are returned sorted.
TrainTestSplit stratified_split_indices(std::span<const int> labels, double test_fraction,
                                        std::uint64_t seed);

struct SplitMatrices {
  FeatureMatrix train;
  FeatureMatrix test;
};
SplitMatrices stratified_split(const FeatureMatrix& m, double test_fraction, std::uint64_t seed);

/// assignments[i] is the fold of sample i.
struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;

  std::vector<Index> test_indices(int fold) const;
  std::vector<Index> train_indices(int fold) const;
  std::size_t fold_size(int fold) const;
};

/// Shuffles each class with the seed and deals it round-robin over the folds;
/// class 1 continues where class 0 stopped so fold sizes differ by at most one.
FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

struct ClassWeights {
  double w0 = 1.0;
  double w1 = 1.0;

  double operator()(int label) const { return label == 1 ? w1 : w0; }
};

/// w_c = n / (2 * n_c).
ClassWeights class_weights(std::span<const int> labels);

/// Keeps at most `cap` rows, sampling proportionally within each
/// (label, attack type) stratum so that rare attack types survive. Every
/// non-empty stratum keeps at least one row. Returned indices are sorted.
std::vector<Index> stratified_subsample(const FeatureMatrix& m, std::size_t cap, std::uint64_t seed);

}  // namespace flowbench
