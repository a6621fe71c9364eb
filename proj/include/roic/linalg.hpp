#pragma once

#include <Eigen/Core>

namespace roic {

template <class Scalar>
using Vec = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Project-wide scalar. Diffusion math and training run in 64-bit.
using Scalar = double;
using Vector = Vec<Scalar>;
using Matrix = Mat<Scalar>;
using Index = Eigen::Index;

/// Index of the largest component; ties resolve to the lowest index.
template <class Derived>
int argmax_lowest(const Eigen::MatrixBase<Derived>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

/// Numerically stable softplus, elementwise: log(1 + exp(x)).
template <class Derived>
auto softplus(const Eigen::ArrayBase<Derived>& x) {
  return x.max(0.0) + (-x.abs()).exp().log1p();
}

/// Logistic sigmoid, elementwise (the derivative of softplus).
template <class Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  return 1.0 / (1.0 + (-x).exp());
}

}  // namespace roic
