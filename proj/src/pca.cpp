#include "flowbench/pca.hpp"

#include "flowbench/svd.hpp"

#include <fmt/format.h>

namespace flowbench {

Vector PcaModel::explained_variance_ratio() const {
  if (total_variance <= 0.0) return Vector::Zero(explained_variance.size());
  return explained_variance / total_variance;
}

PcaModel pca_fit(const Matrix& train, Index k) {
  const Index n = train.rows();
  const Index d = train.cols();
  if (n <= 1) throw Error(fmt::format("pca_fit: need at least 2 samples, got {}", n));
  if (k < 1 || k > std::min(n - 1, d)) {
    throw Error(fmt::format("pca_fit: k = {} outside [1, {}]", k, std::min(n - 1, d)));
  }
  PcaModel model;
  model.samples = n;
  model.mean = train.colwise().mean().transpose();
  const Matrix centred = train.rowwise() - model.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  model.total_variance = centred.colwise().squaredNorm().sum() / denom;

  const SvdResult svd = jacobi_svd(centred);
  model.components = svd.right_vectors.leftCols(k).transpose();
  for (Index i = 0; i < k; ++i) {
    Index arg = 0;
    model.components.row(i).cwiseAbs().maxCoeff(&arg);
    if (model.components(i, arg) < 0.0) model.components.row(i) *= -1.0;
  }
  model.singular_values = svd.singular_values.head(k);
  model.explained_variance = model.singular_values.array().square() / denom;
  return model;
}

PcaModel pca_fit(const FeatureMatrix& train, Index k) { return pca_fit(train.values, k); }

Matrix pca_transform(const Matrix& m, const PcaModel& model) {
  if (m.cols() != model.input_dim()) {
    throw Error(fmt::format("pca_transform: {} columns, model expects {}", m.cols(), model.input_dim()));
  }
  return (m.rowwise() - model.mean.transpose()) * model.components.transpose();
}

FeatureMatrix pca_transform(const FeatureMatrix& m, const PcaModel& model) {
  return m.with_values(pca_transform(m.values, model), numbered_names("pc", model.output_dim()));
}

Matrix pca_inverse(const Matrix& z, const PcaModel& model) {
  if (z.cols() != model.output_dim()) throw Error("pca_inverse: width mismatch");
  return (z * model.components).rowwise() + model.mean.transpose();
}

}  // namespace flowbench
