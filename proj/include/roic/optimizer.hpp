#pragma once

#include <vector>

#include "roic/tensor.hpp"

namespace roic {

/// Adaptive moment estimation with decoupled weight decay and a linear
/// learning-rate decay: lr_k = lr0 * (1 - k / total_steps) for the k-th
/// step (0-based). Moment buffers are laid out parallel to the tensor
/// views handed to the constructor.
class AdamW {
 public:
  struct Config {
    double lr0 = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    long total_steps = 1;
  };

  AdamW(const Config& config, const std::vector<TensorView>& params);

  /// One update. `params` and `grads` must match the construction-time
  /// layout.
  void step(const std::vector<TensorView>& params,
            const std::vector<ConstTensorView>& grads);

  long step_count() const { return step_; }
  double current_lr() const;

  // Checkpoint access.
  const std::vector<Vector>& first_moments() const { return m_; }
  const std::vector<Vector>& second_moments() const { return v_; }
  void restore(std::vector<Vector> m, std::vector<Vector> v, long step);

 private:
  Config config_;
  std::vector<Vector> m_;
  std::vector<Vector> v_;
  long step_ = 0;
};

}  // namespace roic
