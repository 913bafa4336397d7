#include "flowbench/split.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace flowbench {

namespace {

std::array<std::vector<Index>, 2> indices_by_class(std::span<const int> labels) {
  std::array<std::vector<Index>, 2> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y != 0 && y != 1) throw Error(fmt::format("label {} at row {} is not binary", y, i));
    by_class[static_cast<std::size_t>(y)].push_back(static_cast<Index>(i));
  }
  return by_class;
}

}  // namespace

TrainTestSplit stratified_split_indices(std::span<const int> labels, double test_fraction,
                                        std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(fmt::format("test_fraction {} outside (0, 1)", test_fraction));
  }
  auto by_class = indices_by_class(labels);
  Rng rng(seed);
  TrainTestSplit out;
  for (int c = 0; c < 2; ++c) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    if (idx.size() < 2) throw Error(fmt::format("class {} has {} samples; need at least 2", c, idx.size()));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = static_cast<double>(idx.size());
    auto n_test = static_cast<std::size_t>(std::llround(n * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    out.test.insert(out.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

SplitMatrices stratified_split(const FeatureMatrix& m, double test_fraction, std::uint64_t seed) {
  const auto idx = stratified_split_indices(m.labels, test_fraction, seed);
  return {m.select_rows(idx.train), m.select_rows(idx.test)};
}

std::vector<Index> FoldPlan::test_indices(int fold) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(static_cast<Index>(i));
  }
  return out;
}

std::vector<Index> FoldPlan::train_indices(int fold) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(static_cast<Index>(i));
  }
  return out;
}

std::size_t FoldPlan::fold_size(int fold) const {
  return static_cast<std::size_t>(std::count(assignments.begin(), assignments.end(), fold));
}

FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error(fmt::format("fold count {} must be at least 2", k));
  auto by_class = indices_by_class(labels);
  FoldPlan plan;
  plan.k = k;
  plan.assignments.assign(labels.size(), -1);
  Rng rng(seed);
  std::size_t next = 0;
  for (int c = 0; c < 2; ++c) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    if (idx.size() < static_cast<std::size_t>(k)) {
      throw Error(fmt::format("class {} has {} samples, fewer than {} folds", c, idx.size(), k));
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) {
      plan.assignments[static_cast<std::size_t>(i)] = static_cast<int>(next % static_cast<std::size_t>(k));
      ++next;
    }
  }
  return plan;
}

ClassWeights class_weights(std::span<const int> labels) {
  const auto by_class = indices_by_class(labels);
  const auto n0 = static_cast<double>(by_class[0].size());
  const auto n1 = static_cast<double>(by_class[1].size());
  if (n0 == 0 || n1 == 0) throw Error("class_weights needs both classes present");
  const double total = n0 + n1;
  return {total / (2.0 * n0), total / (2.0 * n1)};
}

std::vector<Index> stratified_subsample(const FeatureMatrix& m, std::size_t cap, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(m.rows());
  std::vector<Index> all(n);
  std::iota(all.begin(), all.end(), Index{0});
  if (cap == 0 || cap >= n) return all;

  std::map<std::pair<int, std::string>, std::vector<Index>> strata;
  for (std::size_t i = 0; i < n; ++i) {
    std::string tag = m.has_attack_types() ? m.attack_types[i] : std::string();
    strata[{m.labels[i], std::move(tag)}].push_back(static_cast<Index>(i));
  }

  // Largest-remainder apportionment of `cap` over the strata.
  struct Quota {
    std::vector<Index>* members;
    std::size_t take;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (auto& [key, members] : strata) {
    const double exact = static_cast<double>(cap) * static_cast<double>(members.size()) / static_cast<double>(n);
    auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(exact)));
    take = std::min(take, members.size());
    quotas.push_back({&members, take, exact - std::floor(exact)});
    assigned += take;
  }
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return quotas[a].remainder > quotas[b].remainder; });
  for (std::size_t i = 0; assigned < cap && i < order.size(); ++i) {
    auto& q = quotas[order[i]];
    if (q.take < q.members->size()) {
      ++q.take;
      ++assigned;
    }
  }

  Rng rng(seed);
  std::vector<Index> out;
  out.reserve(assigned);
  for (auto& q : quotas) {
    std::shuffle(q.members->begin(), q.members->end(), rng);
    out.insert(out.end(), q.members->begin(), q.members->begin() + static_cast<std::ptrdiff_t>(q.take));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace flowbench
