#pragma once

#include <string>
#include <vector>

#include "roic/linalg.hpp"

namespace roic {

/// Flat view over one named parameter tensor. Vectors report cols == 1.
/// Serialization is row-major regardless of storage order.
struct TensorView {
  std::string name;
  double* data;
  Index rows;
  Index cols;

  Index size() const { return rows * cols; }
  Eigen::Map<Vector> flat() const { return {data, rows * cols}; }
};

struct ConstTensorView {
  std::string name;
  const double* data;
  Index rows;
  Index cols;

  Index size() const { return rows * cols; }
  Eigen::Map<const Vector> flat() const { return {data, rows * cols}; }
};

namespace detail {

template <class Views, class Tensor>
void push_view(Views& out, const std::string& name, Tensor& tensor) {
  out.push_back({name, tensor.data(), tensor.rows(), tensor.cols()});
}

}  // namespace detail

}  // namespace roic
