#pragma once

#include "roic/linalg.hpp"

namespace roic {

/// Precomputed noise schedule for a T-step diffusion chain.
///
/// Timesteps are 1-based: beta(t), alpha(t) and posterior_var(t) are
/// defined for t in [1, T]; alpha_bar(t) for t in [0, T] with
/// alpha_bar(0) == 1 by convention, which makes the t = 1 reverse step
/// deterministic. Immutable after construction and safe to share.
class NoiseSchedule {
 public:
  /// Builds a schedule from per-step variances. Each beta must lie in
  /// (0, 1). Throws std::invalid_argument otherwise.
  static NoiseSchedule from_betas(const Vector& betas);

  int steps() const { return static_cast<int>(beta_.size()); }

  /// Validates t against the step range [1, T]; throws std::out_of_range.
  int require_step(int t) const { return check_step(t); }

  double beta(int t) const { return beta_[check_step(t) - 1]; }
  double alpha(int t) const { return alpha_[check_step(t) - 1]; }
  double alpha_bar(int t) const { return alpha_bar_[check_state(t)]; }
  double posterior_var(int t) const {
    return posterior_var_[check_step(t) - 1];
  }

  double sqrt_alpha_bar(int t) const {
    return sqrt_alpha_bar_[check_state(t)];
  }
  double sqrt_one_minus_alpha_bar(int t) const {
    return sqrt_one_minus_alpha_bar_[check_state(t)];
  }

  const Vector& betas() const { return beta_; }
  const Vector& alpha_bars() const { return alpha_bar_; }

 private:
  NoiseSchedule() = default;
  int check_step(int t) const;   // valid range [1, T]
  int check_state(int t) const;  // valid range [0, T]

  Vector beta_;                       // [t-1] for t in 1..T
  Vector alpha_;                      // 1 - beta
  Vector alpha_bar_;                  // [t] for t in 0..T, cumulative product
  Vector posterior_var_;              // beta~, [t-1] for t in 1..T
  Vector sqrt_alpha_bar_;             // cached for the samplers
  Vector sqrt_one_minus_alpha_bar_;
};

/// Linear schedule interpolating beta from beta_start (t = 1) to
/// beta_end (t = T) inclusive, divisor T - 1.
/// Requires 0 < beta_start <= beta_end < 1 and T >= 2.
NoiseSchedule build_linear_schedule(int T, double beta_start, double beta_end);

}  // namespace roic
