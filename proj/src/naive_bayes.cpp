#include "flowbench/naive_bayes.hpp"

#include "flowbench/serialize.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace flowbench {

GnbModel gnb_fit(const FeatureMatrix& train, double var_smoothing) {
  const Index d = train.cols();
  const Index n = train.rows();
  std::array<Index, 2> counts{0, 0};
  GnbModel model;
  model.mean = Matrix::Zero(2, d);
  model.variance = Matrix::Zero(2, d);
  for (Index r = 0; r < n; ++r) {
    const auto y = train.labels[static_cast<std::size_t>(r)];
    model.mean.row(y) += train.values.row(r);
    ++counts[static_cast<std::size_t>(y)];
  }
  if (counts[0] == 0 || counts[1] == 0) throw Error("gnb_fit: both classes must be present");
  for (int c = 0; c < 2; ++c) model.mean.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
  for (Index r = 0; r < n; ++r) {
    const auto y = train.labels[static_cast<std::size_t>(r)];
    model.variance.row(y) += (train.values.row(r) - model.mean.row(y)).array().square().matrix();
  }
  for (int c = 0; c < 2; ++c) model.variance.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);

  const Vector overall_mean = train.values.colwise().mean().transpose();
  const double max_var =
      d > 0 ? ((train.values.rowwise() - overall_mean.transpose()).colwise().squaredNorm() / static_cast<double>(n))
                  .maxCoeff()
            : 0.0;
  model.smoothing = var_smoothing * max_var;
  // A constant training set would otherwise leave zero variances.
  if (!(model.smoothing > 0.0)) model.smoothing = var_smoothing > 0.0 ? var_smoothing : 1e-9;
  model.variance.array() += model.smoothing;
  model.prior = {static_cast<double>(counts[0]) / static_cast<double>(n),
                 static_cast<double>(counts[1]) / static_cast<double>(n)};
  return model;
}

Matrix gnb_joint_log_likelihood(const GnbModel& model, const Matrix& m) {
  if (m.cols() != model.mean.cols()) {
    throw Error(fmt::format("gnb_score: {} columns, model expects {}", m.cols(), model.mean.cols()));
  }
  Matrix jll(m.rows(), 2);
  for (int c = 0; c < 2; ++c) {
    const auto var = model.variance.row(c).array();
    const double norm = std::log(model.prior[static_cast<std::size_t>(c)]) -
                        0.5 * (2.0 * std::numbers::pi * var).log().sum();
    for (Index r = 0; r < m.rows(); ++r) {
      jll(r, c) = norm - 0.5 * ((m.row(r).array() - model.mean.row(c).array()).square() / var).sum();
    }
  }
  return jll;
}

Vector gnb_score(const GnbModel& model, const Matrix& m) {
  const Matrix jll = gnb_joint_log_likelihood(model, m);
  Vector p(m.rows());
  for (Index r = 0; r < m.rows(); ++r) {
    // P1 = 1 / (1 + exp(jll0 - jll1)), evaluated without overflow.
    const double delta = jll(r, 0) - jll(r, 1);
    p(r) = delta >= 0.0 ? std::exp(-delta) / (1.0 + std::exp(-delta)) : 1.0 / (1.0 + std::exp(delta));
  }
  return p;
}

void save_gnb(std::ostream& out, const GnbModel& model) {
  out << "flowbench-gnb 1 ";
  io::write_double(out, model.prior[0]);
  out << ' ';
  io::write_double(out, model.prior[1]);
  out << ' ';
  io::write_double(out, model.smoothing);
  out << '\n';
  io::write_matrix(out, model.mean);
  io::write_matrix(out, model.variance);
}

GnbModel load_gnb(std::istream& in) {
  io::TokenReader r(in);
  r.expect("flowbench-gnb");
  if (r.next_int() != 1) throw Error("unsupported naive-Bayes format version");
  GnbModel m;
  m.prior[0] = r.next_double();
  m.prior[1] = r.next_double();
  m.smoothing = r.next_double();
  m.mean = r.next_matrix();
  m.variance = r.next_matrix();
  return m;
}

}  // namespace flowbench
