#include "flowbench/metrics.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace flowbench {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

namespace {

void check_lengths(const Vector& p, std::size_t labels) {
  if (static_cast<std::size_t>(p.size()) != labels) {
    throw Error(fmt::format("{} probabilities but {} labels", p.size(), labels));
  }
}

double ratio(std::int64_t num, std::int64_t den, bool& degenerate) {
  if (den == 0) {
    degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionCounts confusion(const Vector& probabilities, std::span<const int> labels, double threshold) {
  check_lengths(probabilities, labels.size());
  if (!(threshold >= 0.0)) throw Error(fmt::format("threshold {} must be >= 0", threshold));
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = probabilities(static_cast<Index>(i)) >= threshold;
    if (labels[i] == 1) {
      ++(predicted ? c.tp : c.fn);
    } else {
      ++(predicted ? c.fp : c.tn);
    }
  }
  return c;
}

MetricSet metrics(const ConfusionCounts& c) {
  MetricSet m;
  m.acc = ratio(c.tp + c.tn, c.total(), m.degenerate);
  m.dr = ratio(c.tp, c.tp + c.fn, m.degenerate);
  m.far = ratio(c.fp, c.fp + c.tn, m.degenerate);
  m.precision = ratio(c.tp, c.tp + c.fp, m.degenerate);
  // F1 = 2 tp / (2 tp + fp + fn), the same as 2PR/(P+R) when both are defined.
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, m.degenerate);
  return m;
}

RocResult roc_auc(const Vector& probabilities, std::span<const int> labels) {
  check_lengths(probabilities, labels.size());
  std::int64_t pos = 0;
  for (int y : labels) pos += y == 1;
  const std::int64_t neg = static_cast<std::int64_t>(labels.size()) - pos;
  if (pos == 0 || neg == 0) throw Error("roc_auc: labels must contain both classes");
  for (Index i = 0; i < probabilities.size(); ++i) {
    if (std::isnan(probabilities(i))) throw Error("roc_auc: NaN score");
  }

  std::vector<Index> order(labels.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return probabilities(a) > probabilities(b); });

  RocResult out;
  out.curve.points.push_back({0.0, 0.0});
  // Twice the area in units of one positive-negative pair, kept in integers.
  std::int64_t twice_area = 0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = probabilities(order[i]);
    std::int64_t dtp = 0;
    std::int64_t dfp = 0;
    for (; i < order.size() && probabilities(order[i]) == s; ++i) {
      (labels[static_cast<std::size_t>(order[i])] == 1 ? dtp : dfp) += 1;
    }
    twice_area += dfp * (2 * tp + dtp);
    tp += dtp;
    fp += dfp;
    out.curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos)});
  }
  if (out.curve.points.back().far != 1.0 || out.curve.points.back().dr != 1.0) {
    out.curve.points.push_back({1.0, 1.0});
  }
  out.auc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return out;
}

AttackBreakdown per_attack_dr(const Vector& probabilities, std::span<const int> labels,
                              std::span<const std::string> attack_types, double threshold) {
  check_lengths(probabilities, labels.size());
  if (attack_types.size() != labels.size()) {
    throw Error(fmt::format("{} attack types but {} labels", attack_types.size(), labels.size()));
  }
  AttackBreakdown out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    auto& entry = out[attack_types[i]];
    ++entry.actual;
    if (probabilities(static_cast<Index>(i)) >= threshold) ++entry.detected;
  }
  for (auto& [_, e] : out) e.dr = static_cast<double>(e.detected) / static_cast<double>(e.actual);
  return out;
}

EvalReport evaluate(const Vector& probabilities, std::span<const int> labels,
                    std::span<const std::string> attack_types, double threshold) {
  EvalReport r;
  r.counts = confusion(probabilities, labels, threshold);
  r.m = metrics(r.counts);
  auto roc = roc_auc(probabilities, labels);
  r.auc = roc.auc;
  r.roc = std::move(roc.curve);
  if (!attack_types.empty()) r.per_attack = per_attack_dr(probabilities, labels, attack_types, threshold);
  return r;
}

EvalReport aggregate_folds(std::span<const EvalReport> reports) {
  if (reports.empty()) throw Error("aggregate_folds: no reports");
  EvalReport out;
  const double k = static_cast<double>(reports.size());
  bool any_breakdown = false;
  AttackBreakdown breakdown;
  for (const auto& r : reports) {
    out.counts += r.counts;
    out.m.acc += r.m.acc;
    out.m.precision += r.m.precision;
    out.m.dr += r.m.dr;
    out.m.far += r.m.far;
    out.m.f1 += r.m.f1;
    out.m.degenerate = out.m.degenerate || r.m.degenerate;
    out.auc += r.auc;
    if (r.per_attack) {
      any_breakdown = true;
      for (const auto& [name, e] : *r.per_attack) {
        breakdown[name].actual += e.actual;
        breakdown[name].detected += e.detected;
      }
    }
  }
  out.m.acc /= k;
  out.m.precision /= k;
  out.m.dr /= k;
  out.m.far /= k;
  out.m.f1 /= k;
  out.auc /= k;
  if (any_breakdown) {
    for (auto& [_, e] : breakdown) e.dr = static_cast<double>(e.detected) / static_cast<double>(e.actual);
    out.per_attack = std::move(breakdown);
  }
  return out;
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "far,dr\n";
  for (const auto& p : curve.points) fmt::print(out, "{},{}\n", p.far, p.dr);
}

}  // namespace flowbench
