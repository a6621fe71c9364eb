#pragma once

// Central-finite-difference gradient checking shared by the network
// tests and the acceptance suite: step 1e-5, 64-bit, <= 1e-4 relative
// error against the analytic gradient at sampled coordinates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "roic/rng.hpp"
#include "roic/tensor.hpp"

namespace roic::testing {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdTolerance = 1e-4;

struct GradCheckResult {
  int coords_checked = 0;
  double max_rel_error = 0.0;
  std::string worst;  // tensor/coordinate of the worst error
};

/// Compares analytic gradients against central differences at
/// `n_coords` sampled coordinates of one tensor (plus any forced
/// coordinates). `objective` must re-evaluate the scalar loss at the
/// current parameter values.
inline void check_tensor_gradient(const TensorView& param,
                                  const ConstTensorView& analytic,
                                  const std::function<double()>& objective,
                                  Rng& rng, GradCheckResult& result,
                                  int n_coords = 20,
                                  std::vector<Index> forced = {}) {
  std::set<Index> coords(forced.begin(), forced.end());
  const Index size = param.size();
  const int target = std::min<Index>(size, n_coords);
  while (static_cast<int>(coords.size()) < target) {
    coords.insert(rng.uniform_int(static_cast<int>(size)));
  }

  for (const Index i : coords) {
    double& coord = param.data[i];
    const double original = coord;
    coord = original + kFdStep;
    const double up = objective();
    coord = original - kFdStep;
    const double down = objective();
    coord = original;
    const double numeric = (up - down) / (2.0 * kFdStep);
    const double exact = analytic.data[i];

    const double denom = std::max(std::abs(numeric), std::abs(exact));
    double rel;
    if (denom < 1e-7) {
      rel = std::abs(numeric - exact) < 1e-7 ? 0.0 : 1.0;
    } else {
      rel = std::abs(numeric - exact) / denom;
    }
    ++result.coords_checked;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst = param.name + "[" + std::to_string(i) + "]";
    }
  }
}

}  // namespace roic::testing
