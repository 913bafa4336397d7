#include "flowbench/lda.hpp"

#include <fmt/format.h>

namespace flowbench {

LdaModel lda_fit(const FeatureMatrix& train, double ridge) {
  const Index d = train.cols();
  if (d < 1) throw Error("lda_fit: no features");
  std::array<Index, 2> counts{0, 0};
  LdaModel model;
  model.class_means = Matrix::Zero(2, d);
  for (Index r = 0; r < train.rows(); ++r) {
    const int y = train.labels[static_cast<std::size_t>(r)];
    model.class_means.row(y) += train.values.row(r);
    ++counts[static_cast<std::size_t>(y)];
  }
  if (counts[0] == 0 || counts[1] == 0) throw Error("lda_fit: both classes must be present");
  model.class_means.row(0) /= static_cast<double>(counts[0]);
  model.class_means.row(1) /= static_cast<double>(counts[1]);

  Matrix within = Matrix::Zero(d, d);
  Matrix centred(train.rows(), d);
  for (Index r = 0; r < train.rows(); ++r) {
    centred.row(r) = train.values.row(r) - model.class_means.row(train.labels[static_cast<std::size_t>(r)]);
  }
  within.selfadjointView<Eigen::Lower>().rankUpdate(centred.transpose());
  within = within.selfadjointView<Eigen::Lower>();

  const Vector diff = (model.class_means.row(1) - model.class_means.row(0)).transpose();
  const double scale = std::max(1.0, model.class_means.cwiseAbs().maxCoeff());
  if (diff.norm() <= 1e-12 * scale) {
    model.zero_separation = true;
    model.projection = Vector::Unit(d, 0);
  } else {
    const double trace = within.trace();
    if (trace > 0.0) {
      within.diagonal().array() += ridge * trace / static_cast<double>(d);
    } else {
      within.setIdentity();
    }
    Eigen::LDLT<Matrix> solver(within);
    Vector w = solver.solve(diff);
    if (solver.info() != Eigen::Success || !w.allFinite() || w.norm() == 0.0) {
      // Singular scatter with no ridge: fall back to the pseudo-inverse direction.
      w = within.completeOrthogonalDecomposition().solve(diff);
      if (!w.allFinite() || w.norm() == 0.0) w = diff;
    }
    if (w.dot(diff) < 0.0) w = -w;
    model.projection = w / w.norm();
  }

  const Vector z = lda_project(train.values, model);
  const double mean = z.mean();
  model.output_variance =
      train.rows() > 1 ? (z.array() - mean).square().sum() / static_cast<double>(train.rows() - 1) : 0.0;
  return model;
}

Vector lda_project(const Matrix& m, const LdaModel& model) {
  if (m.cols() != model.input_dim()) {
    throw Error(fmt::format("lda_transform: {} columns, model expects {}", m.cols(), model.input_dim()));
  }
  return m * model.projection;
}

FeatureMatrix lda_transform(const FeatureMatrix& m, const LdaModel& model) {
  return m.with_values(Matrix(lda_project(m.values, model)), {"ld0"});
}

}  // namespace flowbench
