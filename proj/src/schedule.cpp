#include "roic/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace roic {

int NoiseSchedule::check_step(int t) const {
  if (t < 1 || t > steps()) {
    throw std::out_of_range("timestep " + std::to_string(t) +
                            " outside [1, " + std::to_string(steps()) + "]");
  }
  return t;
}

int NoiseSchedule::check_state(int t) const {
  if (t < 0 || t > steps()) {
    throw std::out_of_range("timestep " + std::to_string(t) +
                            " outside [0, " + std::to_string(steps()) + "]");
  }
  return t;
}

NoiseSchedule NoiseSchedule::from_betas(const Vector& betas) {
  const Index T = betas.size();
  if (T < 1) throw std::invalid_argument("schedule needs at least one step");
  for (Index i = 0; i < T; ++i) {
    if (!(betas[i] > 0.0 && betas[i] < 1.0)) {
      throw std::invalid_argument("beta[" + std::to_string(i + 1) +
                                  "] outside (0, 1)");
    }
  }

  NoiseSchedule s;
  s.beta_ = betas;
  s.alpha_ = Vector::Ones(T) - betas;
  s.alpha_bar_.resize(T + 1);
  s.alpha_bar_[0] = 1.0;
  for (Index t = 1; t <= T; ++t) {
    s.alpha_bar_[t] = s.alpha_bar_[t - 1] * s.alpha_[t - 1];
  }
  s.posterior_var_.resize(T);
  for (Index t = 1; t <= T; ++t) {
    s.posterior_var_[t - 1] =
        (1.0 - s.alpha_bar_[t - 1]) / (1.0 - s.alpha_bar_[t]) * s.beta_[t - 1];
  }
  s.sqrt_alpha_bar_ = s.alpha_bar_.cwiseSqrt();
  s.sqrt_one_minus_alpha_bar_ =
      (Vector::Ones(T + 1) - s.alpha_bar_).cwiseSqrt();
  return s;
}

NoiseSchedule build_linear_schedule(int T, double beta_start, double beta_end) {
  if (T < 2) throw std::invalid_argument("linear schedule requires T >= 2");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw std::invalid_argument(
        "linear schedule requires 0 < beta_start <= beta_end < 1");
  }
  Vector betas(T);
  const double span = beta_end - beta_start;
  for (int t = 1; t <= T; ++t) {
    betas[t - 1] = beta_start + static_cast<double>(t - 1) /
                                    static_cast<double>(T - 1) * span;
  }
  // Pin the endpoints exactly; interpolation rounding must not move them.
  betas[0] = beta_start;
  betas[T - 1] = beta_end;
  return NoiseSchedule::from_betas(betas);
}

}  // namespace roic
