#include "flowbench/logistic.hpp"

#include "flowbench/serialize.hpp"

#include <fmt/format.h>

#include <cmath>
#include <deque>

namespace flowbench {

namespace {

// log(1 + exp(-m)) without overflow.
double log1p_exp_neg(double m) {
  return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

// 1 / (1 + exp(m)).
double sigmoid_neg(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

}  // namespace

LrObjective lr_objective(const Matrix& x, std::span<const int> labels, const Vector& sample_weights,
                         const Vector& weights, double bias, double c) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (static_cast<Index>(labels.size()) != n || sample_weights.size() != n || weights.size() != d) {
    throw Error("lr_objective: shape mismatch");
  }
  const Vector z = (x * weights).array() + bias;
  LrObjective out;
  out.value = 0.5 * weights.squaredNorm();
  Vector coef(n);  // d(loss_i)/dz_i, scaled by C * omega_i
  for (Index i = 0; i < n; ++i) {
    const double y = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    const double margin = y * z(i);
    out.value += c * sample_weights(i) * log1p_exp_neg(margin);
    coef(i) = -c * sample_weights(i) * y * sigmoid_neg(margin);
  }
  out.gradient.resize(d + 1);
  out.gradient.head(d) = weights + x.transpose() * coef;
  out.gradient(d) = coef.sum();
  return out;
}

LrModel lr_fit(const FeatureMatrix& train, std::optional<ClassWeights> class_weights, const LrOptions& options) {
  const Index n = train.rows();
  const Index d = train.cols();
  if (n == 0) throw Error("lr_fit: empty training data");
  Vector omega(n);
  for (Index i = 0; i < n; ++i) {
    omega(i) = class_weights ? (*class_weights)(train.labels[static_cast<std::size_t>(i)]) : 1.0;
  }

  Vector theta = Vector::Zero(d + 1);
  auto evaluate = [&](const Vector& t) {
    auto obj = lr_objective(train.values, train.labels, omega, t.head(d), t(d), options.c);
    if (!std::isfinite(obj.value)) throw Error("lr_fit: non-finite loss");
    return obj;
  };

  LrModel model;
  model.c = options.c;
  LrObjective cur = evaluate(theta);
  std::deque<std::pair<Vector, Vector>> memory;  // (s, y)

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (cur.gradient.lpNorm<Eigen::Infinity>() <= options.tolerance) break;

    // Two-loop recursion.
    Vector q = cur.gradient;
    std::vector<double> alpha(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
      const auto& [s, y] = memory[k];
      alpha[k] = s.dot(q) / y.dot(s);
      q -= alpha[k] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= s.dot(y) / y.squaredNorm();
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const auto& [s, y] = memory[k];
      const double beta = y.dot(q) / y.dot(s);
      q += s * (alpha[k] - beta);
    }
    Vector direction = -q;
    double slope = cur.gradient.dot(direction);
    if (!(slope < 0.0)) {
      memory.clear();
      direction = -cur.gradient;
      slope = -cur.gradient.squaredNorm();
    }

    double step = memory.empty() ? 1.0 / std::max(1.0, cur.gradient.norm()) : 1.0;
    LrObjective next;
    Vector candidate;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      candidate = theta + step * direction;
      next = lr_objective(train.values, train.labels, omega, candidate.head(d), candidate(d), options.c);
      if (std::isfinite(next.value) && next.value <= cur.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Vector s = candidate - theta;
    Vector y = next.gradient - cur.gradient;
    if (s.dot(y) > 1e-12 * y.squaredNorm() && s.dot(y) > 0.0) {
      memory.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(memory.size()) > options.history) memory.pop_front();
    }
    theta = std::move(candidate);
    cur = std::move(next);
  }

  model.weights = theta.head(d);
  model.bias = theta(d);
  model.iterations_used = iter;
  model.converged = cur.gradient.lpNorm<Eigen::Infinity>() <= options.tolerance;
  return model;
}

Vector lr_score(const LrModel& model, const Matrix& m) {
  if (m.cols() != model.weights.size()) {
    throw Error(fmt::format("lr_score: {} columns, model expects {}", m.cols(), model.weights.size()));
  }
  const Vector z = (m * model.weights).array() + model.bias;
  return z.unaryExpr([](double v) { return sigmoid_neg(-v); });
}

void save_lr(std::ostream& out, const LrModel& model) {
  out << "flowbench-lr 1 " << (model.converged ? 1 : 0) << ' ' << model.iterations_used << ' ';
  io::write_double(out, model.c);
  out << ' ';
  io::write_double(out, model.bias);
  out << '\n';
  io::write_vector(out, model.weights);
}

LrModel load_lr(std::istream& in) {
  io::TokenReader r(in);
  r.expect("flowbench-lr");
  if (r.next_int() != 1) throw Error("unsupported logistic-regression format version");
  LrModel m;
  m.converged = r.next_int() != 0;
  m.iterations_used = static_cast<int>(r.next_int());
  m.c = r.next_double();
  m.bias = r.next_double();
  m.weights = r.next_vector();
  return m;
}

}  // namespace flowbench
