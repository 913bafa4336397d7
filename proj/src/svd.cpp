#include "flowbench/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flowbench {

SvdResult jacobi_svd(const Matrix& input, double tolerance, int max_sweeps) {
  const Index d = input.cols();
  Matrix a;
  if (input.rows() > d) {
    Eigen::HouseholderQR<Matrix> qr(input);
    a = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  } else {
    a = input;
  }
  Matrix v = Matrix::Identity(d, d);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (Index p = 0; p + 1 < d; ++p) {
      for (Index q = p + 1; q < d; ++q) {
        const double alpha = a.col(p).squaredNorm();
        const double beta = a.col(q).squaredNorm();
        const double gamma = a.col(p).dot(a.col(q));
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= tolerance * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Index r = 0; r < a.rows(); ++r) {
          const double ap = a(r, p);
          const double aq = a(r, q);
          a(r, p) = c * ap - s * aq;
          a(r, q) = s * ap + c * aq;
        }
        for (Index r = 0; r < d; ++r) {
          const double vp = v(r, p);
          const double vq = v(r, q);
          v(r, p) = c * vp - s * vq;
          v(r, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  Vector sigma(d);
  for (Index j = 0; j < d; ++j) sigma(j) = a.col(j).norm();
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return sigma(x) > sigma(y); });

  SvdResult out;
  out.singular_values.resize(d);
  out.right_vectors.resize(d, d);
  for (Index j = 0; j < d; ++j) {
    out.singular_values(j) = sigma(order[static_cast<std::size_t>(j)]);
    out.right_vectors.col(j) = v.col(order[static_cast<std::size_t>(j)]);
  }
  return out;
}

}  // namespace flowbench
