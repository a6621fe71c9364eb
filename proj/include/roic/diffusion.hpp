#pragma once

#include <cmath>
#include <stdexcept>

#include "roic/linalg.hpp"
#include "roic/schedule.hpp"

namespace roic {

namespace detail {

template <class D1, class D2>
void check_same_shape(const Eigen::MatrixBase<D1>& a,
                      const Eigen::MatrixBase<D2>& b, const char* where) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(where) + ": shape mismatch");
  }
}

}  // namespace detail

/// Closed-form forward noising of a label vector:
///   y_t = sqrt(abar_t) * y0 + sqrt(1 - abar_t) * eps.
template <class D1, class D2>
Vector diffuse_label(const Eigen::MatrixBase<D1>& y0, int t,
                     const Eigen::MatrixBase<D2>& eps,
                     const NoiseSchedule& s) {
  detail::check_same_shape(y0, eps, "diffuse_label");
  s.require_step(t);
  return s.sqrt_alpha_bar(t) * y0 + s.sqrt_one_minus_alpha_bar(t) * eps;
}

/// Closed-form estimate of the clean label from a noisy state and a
/// noise estimate:
///   y0_hat = (y_t - sqrt(1 - abar_t) * eps_theta) / sqrt(abar_t).
template <class D1, class D2>
Vector reconstruct_y0(const Eigen::MatrixBase<D1>& y_t,
                      const Eigen::MatrixBase<D2>& eps_theta, int t,
                      const NoiseSchedule& s) {
  detail::check_same_shape(y_t, eps_theta, "reconstruct_y0");
  s.require_step(t);
  return (y_t - s.sqrt_one_minus_alpha_bar(t) * eps_theta) /
         s.sqrt_alpha_bar(t);
}

/// Coefficients of one reverse step
///   y_{t-1} = y0_coef * y0_hat + yt_coef * y_t + sigma * zeta.
/// The posterior mean is
///   mu~ = sqrt(abar_{t-1}) beta_t / (1 - abar_t) * y0_hat
///       + sqrt(alpha_t) (1 - abar_{t-1}) / (1 - abar_t) * y_t
/// with variance beta~_t, so sigma defaults to sqrt(beta~_t).
/// `literal_variance_noise` scales zeta by beta~_t itself instead, for
/// ablation against the unsquare-rooted variant.
struct PosteriorCoeffs {
  double y0_coef;
  double yt_coef;
  double sigma;
};

inline PosteriorCoeffs posterior_coeffs(int t, const NoiseSchedule& s,
                                        bool literal_variance_noise = false) {
  s.require_step(t);
  if (t == 1) {
    // abar_0 = 1 collapses the step to y0_hat exactly: the y_t coefficient
    // and the posterior variance both carry a (1 - abar_0) = 0 factor.
    return {1.0, 0.0, 0.0};
  }
  const double one_minus_abar_t = 1.0 - s.alpha_bar(t);
  const double y0_coef = s.sqrt_alpha_bar(t - 1) * s.beta(t) / one_minus_abar_t;
  const double yt_coef =
      std::sqrt(s.alpha(t)) * (1.0 - s.alpha_bar(t - 1)) / one_minus_abar_t;
  const double var = s.posterior_var(t);
  return {y0_coef, yt_coef, literal_variance_noise ? var : std::sqrt(var)};
}

/// One reverse (denoising) step: posterior mean plus scaled noise.
/// Callers draw zeta from a standard Gaussian, or pass zeros at t = 1
/// (where sigma is 0 anyway and the output equals y0_hat).
template <class D1, class D2, class D3>
Vector posterior_step(const Eigen::MatrixBase<D1>& y_t,
                      const Eigen::MatrixBase<D2>& y0_hat, int t,
                      const Eigen::MatrixBase<D3>& zeta,
                      const NoiseSchedule& s,
                      bool literal_variance_noise = false) {
  detail::check_same_shape(y_t, y0_hat, "posterior_step");
  detail::check_same_shape(y_t, zeta, "posterior_step");
  const PosteriorCoeffs c = posterior_coeffs(t, s, literal_variance_noise);
  return c.y0_coef * y0_hat + c.yt_coef * y_t + c.sigma * zeta;
}

/// Noise-prediction training loss: mean over batch and components of
/// the squared componentwise difference. Accepts single vectors or
/// matrices holding one example per column.
template <class D1, class D2>
double simple_loss(const Eigen::MatrixBase<D1>& eps,
                   const Eigen::MatrixBase<D2>& eps_theta) {
  detail::check_same_shape(eps, eps_theta, "simple_loss");
  if (eps.size() == 0) throw std::invalid_argument("simple_loss: empty input");
  return (eps - eps_theta).squaredNorm() / static_cast<double>(eps.size());
}

}  // namespace roic
