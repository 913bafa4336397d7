#include "flowbench/tree.hpp"

#include "flowbench/serialize.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <numeric>

namespace flowbench {

namespace {

constexpr double kImpurityTolerance = 1e-12;

double gini(double w0, double w1) {
  const double total = w0 + w1;
  if (total <= 0.0) return 0.0;
  const double p0 = w0 / total;
  const double p1 = w1 / total;
  return 1.0 - p0 * p0 - p1 * p1;
}

struct Frame {
  int node;
  std::size_t begin;
  std::size_t end;
  int depth;
};

class Builder {
public:
  Builder(const FeatureMatrix& data, std::optional<ClassWeights> weights)
      : x_(data.values), labels_(data.labels), n_(static_cast<std::size_t>(data.rows())),
        d_(static_cast<std::size_t>(data.cols())) {
    sample_weight_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) sample_weight_[i] = weights ? (*weights)(labels_[i]) : 1.0;
    sorted_.resize(d_);
    for (std::size_t f = 0; f < d_; ++f) {
      auto& idx = sorted_[f];
      idx.resize(n_);
      std::iota(idx.begin(), idx.end(), 0u);
      const auto col = static_cast<Index>(f);
      std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
        return x_(static_cast<Index>(a), col) < x_(static_cast<Index>(b), col);
      });
    }
    goes_left_.resize(n_);
    scratch_.resize(n_);
  }

  DecisionTree build() {
    DecisionTree tree;
    tree.n_features = static_cast<Index>(d_);
    tree.nodes.emplace_back();
    std::vector<Frame> stack{{0, 0, n_, 0}};
    while (!stack.empty()) {
      const Frame fr = stack.back();
      stack.pop_back();
      TreeNode node;
      const auto& members = d_ > 0 ? sorted_[0] : all_rows();
      for (std::size_t i = fr.begin; i < fr.end; ++i) {
        const auto r = members[i];
        ++node.class_counts[static_cast<std::size_t>(labels_[r])];
        node.class_weight[static_cast<std::size_t>(labels_[r])] += sample_weight_[r];
      }
      const double parent = gini(node.class_weight[0], node.class_weight[1]);
      int feature = -1;
      double threshold = 0.0;
      if (parent > 0.0 && d_ > 0) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < d_; ++f) {
          evaluate_feature(f, fr.begin, fr.end, node.class_weight, best, feature, threshold);
        }
      }
      if (feature < 0) {
        tree.nodes[static_cast<std::size_t>(fr.node)] = node;
        continue;
      }
      node.feature = feature;
      node.threshold = threshold;
      const std::size_t mid = partition(static_cast<std::size_t>(feature), threshold, fr.begin, fr.end);
      node.left = static_cast<int>(tree.nodes.size());
      node.right = node.left + 1;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      tree.nodes[static_cast<std::size_t>(fr.node)] = node;
      stack.push_back({node.right, mid, fr.end, fr.depth + 1});
      stack.push_back({node.left, fr.begin, mid, fr.depth + 1});
    }
    return tree;
  }

private:
  const std::vector<std::uint32_t>& all_rows() {
    if (identity_.empty()) {
      identity_.resize(n_);
      std::iota(identity_.begin(), identity_.end(), 0u);
    }
    return identity_;
  }

  double value(std::uint32_t row, std::size_t f) const {
    return x_(static_cast<Index>(row), static_cast<Index>(f));
  }

  void evaluate_feature(std::size_t f, std::size_t begin, std::size_t end, const std::array<double, 2>& totals,
                        double& best, int& best_feature, double& best_threshold) const {
    const auto& idx = sorted_[f];
    const double total = totals[0] + totals[1];
    std::array<double, 2> left{0.0, 0.0};
    for (std::size_t i = begin; i + 1 < end; ++i) {
      const auto r = idx[i];
      left[static_cast<std::size_t>(labels_[r])] += sample_weight_[r];
      const double a = value(r, f);
      const double b = value(idx[i + 1], f);
      if (!(a < b)) continue;
      const double wl = left[0] + left[1];
      const double wr = total - wl;
      const double impurity =
          (wl / total) * gini(left[0], left[1]) + (wr / total) * gini(totals[0] - left[0], totals[1] - left[1]);
      if (impurity < best - kImpurityTolerance) {
        best = impurity;
        best_feature = static_cast<int>(f);
        double mid = a + (b - a) / 2.0;
        if (!(mid < b)) mid = a;
        best_threshold = mid;
      }
    }
  }

  // Stable partition of every feature's segment by the chosen split.
  std::size_t partition(std::size_t feature, double threshold, std::size_t begin, std::size_t end) {
    std::size_t n_left = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto r = sorted_[feature][i];
      goes_left_[r] = value(r, feature) <= threshold;
      n_left += goes_left_[r];
    }
    for (auto& idx : sorted_) {
      std::size_t l = begin;
      std::size_t rr = begin + n_left;
      for (std::size_t i = begin; i < end; ++i) {
        const auto r = idx[i];
        scratch_[goes_left_[r] ? l++ : rr++] = r;
      }
      std::copy(scratch_.begin() + static_cast<std::ptrdiff_t>(begin),
                scratch_.begin() + static_cast<std::ptrdiff_t>(end), idx.begin() + static_cast<std::ptrdiff_t>(begin));
    }
    return begin + n_left;
  }

  const Matrix& x_;
  const std::vector<int>& labels_;
  std::size_t n_;
  std::size_t d_;
  std::vector<double> sample_weight_;
  std::vector<std::vector<std::uint32_t>> sorted_;
  std::vector<std::uint32_t> identity_;
  std::vector<char> goes_left_;
  std::vector<std::uint32_t> scratch_;
};

}  // namespace

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  int deepest = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, dep] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, dep);
    const auto& n = nodes[static_cast<std::size_t>(id)];
    if (!n.is_leaf()) {
      stack.push_back({n.left, dep + 1});
      stack.push_back({n.right, dep + 1});
    }
  }
  return deepest;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

DecisionTree dt_fit(const FeatureMatrix& train, std::optional<ClassWeights> weights) {
  if (train.rows() == 0) throw Error("dt_fit: empty training data");
  if (static_cast<std::size_t>(train.rows()) > std::numeric_limits<std::uint32_t>::max()) {
    throw Error("dt_fit: too many rows");
  }
  return Builder(train, weights).build();
}

Vector dt_score(const DecisionTree& tree, const Matrix& m) {
  if (m.cols() != tree.n_features) {
    throw Error(fmt::format("dt_score: {} columns, tree expects {}", m.cols(), tree.n_features));
  }
  if (tree.nodes.empty()) throw Error("dt_score: empty tree");
  Vector out(m.rows());
  for (Index r = 0; r < m.rows(); ++r) {
    const TreeNode* node = &tree.nodes[0];
    while (!node->is_leaf()) {
      const auto next = m(r, node->feature) <= node->threshold ? node->left : node->right;
      node = &tree.nodes[static_cast<std::size_t>(next)];
    }
    const double total = node->class_weight[0] + node->class_weight[1];
    out(r) = total > 0.0 ? node->class_weight[1] / total : 0.0;
  }
  return out;
}

namespace {

void save_node(std::ostream& out, const DecisionTree& tree, int id) {
  // Iterative pre-order to survive deep trees.
  std::vector<int> stack{id};
  while (!stack.empty()) {
    const auto& n = tree.nodes[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (n.is_leaf()) {
      out << "leaf " << n.class_counts[0] << ' ' << n.class_counts[1] << ' ';
      io::write_double(out, n.class_weight[0]);
      out << ' ';
      io::write_double(out, n.class_weight[1]);
      out << '\n';
    } else {
      out << "split " << n.feature << ' ';
      io::write_double(out, n.threshold);
      out << ' ' << n.class_counts[0] << ' ' << n.class_counts[1] << ' ';
      io::write_double(out, n.class_weight[0]);
      out << ' ';
      io::write_double(out, n.class_weight[1]);
      out << '\n';
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
}

}  // namespace

void save_tree(std::ostream& out, const DecisionTree& tree) {
  out << "flowbench-tree 1 " << tree.n_features << ' ' << tree.nodes.size() << '\n';
  if (!tree.nodes.empty()) save_node(out, tree, 0);
  out << "end\n";
}

DecisionTree load_tree(std::istream& in) {
  io::TokenReader r(in);
  r.expect("flowbench-tree");
  if (r.next_int() != 1) throw Error("unsupported tree format version");
  DecisionTree tree;
  tree.n_features = r.next_int();
  const auto count = static_cast<std::size_t>(r.next_int());
  tree.nodes.reserve(count);
  // Pending child slots, filled in pre-order.
  std::vector<std::pair<int, bool>> pending;  // (parent, is_left)
  for (std::size_t i = 0; i < count; ++i) {
    TreeNode n;
    const auto kind = r.next();
    if (kind == "split") {
      n.feature = static_cast<int>(r.next_int());
      n.threshold = r.next_double();
    } else if (kind != "leaf") {
      throw Error(fmt::format("tree file: unexpected token '{}'", kind));
    }
    n.class_counts[0] = r.next_int();
    n.class_counts[1] = r.next_int();
    n.class_weight[0] = r.next_double();
    n.class_weight[1] = r.next_double();
    const int id = static_cast<int>(tree.nodes.size());
    if (!pending.empty()) {
      auto [parent, is_left] = pending.back();
      pending.pop_back();
      (is_left ? tree.nodes[static_cast<std::size_t>(parent)].left : tree.nodes[static_cast<std::size_t>(parent)].right) = id;
    } else if (id != 0) {
      throw Error("tree file: node without a parent");
    }
    tree.nodes.push_back(n);
    if (!n.is_leaf()) {
      pending.push_back({id, false});
      pending.push_back({id, true});
    }
  }
  if (!pending.empty()) throw Error("tree file: truncated");
  r.expect("end");
  return tree;
}

}  // namespace flowbench
