#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>

namespace perfctl {

using Scalar = double;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline Scalar spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.jacobiSvd().singularValues()(0);
}

}  // namespace perfctl
