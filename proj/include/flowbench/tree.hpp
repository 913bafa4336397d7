#pragma once

#include "flowbench/common.hpp"
#include "flowbench/split.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace flowbench {

/// Internal nodes send x[feature] <= threshold left and the rest right.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<std::int64_t, 2> class_counts{0, 0};
  std::array<double, 2> class_weight{0.0, 0.0};  // equals class_counts unless sample-weighted

  bool is_leaf() const { return feature < 0; }
};

/// CART classifier grown with Gini impurity until every leaf is pure or holds
/// identical rows. nodes[0] is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;
  Index n_features = 0;

  int depth() const;
  std::size_t leaf_count() const;
};

/// Each impure node takes its lowest weighted-Gini split, even when that split
/// leaves the impurity unchanged. Candidate thresholds are midpoints of
/// consecutive distinct values. Ties in
/// impurity (within 1e-12) keep the lowest feature index, then the lowest threshold.
DecisionTree dt_fit(const FeatureMatrix& train, std::optional<ClassWeights> weights = std::nullopt);

/// Class-1 fraction of the leaf each row lands in.
Vector dt_score(const DecisionTree& tree, const Matrix& m);

void save_tree(std::ostream& out, const DecisionTree& tree);
DecisionTree load_tree(std::istream& in);

}  // namespace flowbench
