#pragma once

#include "flowbench/common.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flowbench {

inline constexpr double kDefaultThreshold = 0.5;

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

/// Predicted positive iff p >= threshold.
ConfusionCounts confusion(const Vector& probabilities, std::span<const int> labels,
                          double threshold = kDefaultThreshold);

struct MetricSet {
  double acc = 0.0;
  double precision = 0.0;
  double dr = 0.0;
  double far = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // some denominator was zero and its metric set to 0
};

MetricSet metrics(const ConfusionCounts& c);

struct RocPoint {
  double far = 0.0;
  double dr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
};

struct RocResult {
  RocCurve curve;
  double auc = 0.0;
};

/// Thresholds sweep the distinct scores from high to low; tied scores enter
/// together, giving a diagonal segment.
RocResult roc_auc(const Vector& probabilities, std::span<const int> labels);

struct AttackDr {
  std::int64_t actual = 0;
  std::int64_t detected = 0;
  double dr = 0.0;
};

using AttackBreakdown = std::map<std::string, AttackDr>;

/// Only attack rows (label 1) are counted.
AttackBreakdown per_attack_dr(const Vector& probabilities, std::span<const int> labels,
                              std::span<const std::string> attack_types, double threshold = kDefaultThreshold);

struct EvalReport {
  ConfusionCounts counts;
  MetricSet m;
  double auc = 0.0;
  RocCurve roc;
  std::optional<AttackBreakdown> per_attack;
};

EvalReport evaluate(const Vector& probabilities, std::span<const int> labels,
                    std::span<const std::string> attack_types = {}, double threshold = kDefaultThreshold);

/// Mean of each metric and of AUC across folds; counts and per-attack tallies
/// are summed. The ROC curve is left empty.
EvalReport aggregate_folds(std::span<const EvalReport> reports);

void write_roc_csv(std::ostream& out, const RocCurve& curve);

}  // namespace flowbench
