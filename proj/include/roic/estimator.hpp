#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "roic/encoder.hpp"
#include "roic/tensor.hpp"

namespace roic {

/// Layer-norm variance floor. Small enough that normalized vectors keep
/// unit variance to within 1e-5 even when the raw variance is ~1e-7.
inline constexpr double kLayerNormEps = 1e-12;

/// Noise estimator predicting the Gaussian noise carried by a noisy
/// label vector, conditioned on the text, the timestep and optionally an
/// advisor soft label.
///
/// Pipeline (d = feature dim, C = classes):
///   y_in = y_t (+ y_adv)
///   e    = time_table[t] . (y_proj_w * y_in + y_proj_b)   (elementwise)
///   d_t  = layernorm(softplus(e)) * gain + bias            (smoother)
///   f    = d_t . h1                                        (elementwise)
///   eps  = proj_w2 * layernorm'(softplus(proj_w1 * f + proj_b1)) + proj_b2
/// The final projection is linear with no activation so the output can
/// cover all of R^C, and starts at zero so an untrained model predicts
/// zero noise.
struct EstimatorParams {
  EncoderParams encoder;
  Matrix time_table;     // d x (T+1), column per timestep
  Matrix y_proj_w;       // d x C
  Vector y_proj_b;       // d
  Vector smoother_gain;  // d, init 1
  Vector smoother_bias;  // d, init 0
  Matrix proj_w1;        // d x d
  Vector proj_b1;        // d
  Vector proj_ln_gain;   // d, init 1
  Vector proj_ln_bias;   // d, init 0
  Matrix proj_w2;        // C x d, init 0
  Vector proj_b2;        // C, init 0

  int num_classes() const { return static_cast<int>(proj_w2.rows()); }
  int feature_dim() const { return static_cast<int>(time_table.rows()); }
  int timesteps() const { return static_cast<int>(time_table.cols()) - 1; }

  static EstimatorParams init(int num_classes, int timesteps,
                              const EncoderDims& dims, std::uint64_t seed);
  static EstimatorParams zeros_like(const EstimatorParams& p);

  std::size_t parameter_count() const;
  bool all_finite() const;
};

std::vector<TensorView> tensor_views(EstimatorParams& p);
std::vector<ConstTensorView> tensor_views(const EstimatorParams& p);

struct EstimatorCache {
  bool valid = false;
  const EstimatorParams* params = nullptr;
  int t = 0;
  EncoderCache enc;
  Vector h1;
  Vector y_in;
  Vector e;
  Vector sp;        // softplus(e)
  Vector sp_hat;    // normalized softplus(e)
  double sm_inv_sigma = 0.0;
  Vector d_t;
  Vector fusion;
  Vector u1;
  Vector s1;        // softplus(u1)
  Vector s1_hat;
  double pr_inv_sigma = 0.0;
  Vector n1;
};

/// Predicted noise for one example. y_adv, when provided, is added to
/// y_t before the label projection. Throws std::out_of_range for a bad
/// timestep and std::invalid_argument on dimension mismatch.
Vector estimator_forward(std::span<const int> tokens, const Vector& y_t, int t,
                         const Vector* y_adv, const EstimatorParams& p,
                         EstimatorCache* cache = nullptr);

/// Exact gradients of grad_eps . eps_theta with respect to every
/// parameter, including the encoder. Only row t of the time table
/// receives gradient.
EstimatorParams estimator_backward(const Vector& grad_eps,
                                   const EstimatorCache& cache,
                                   const EstimatorParams& p);

/// Accumulating variant used by the training loop.
void estimator_backward_accumulate(const Vector& grad_eps,
                                   const EstimatorCache& cache,
                                   const EstimatorParams& p,
                                   EstimatorParams& grads);

/// Scratch buffers for the batched head evaluation. Reusable across
/// steps; resized on demand.
struct HeadWorkspace {
  Matrix y_in, lin, sp, sp_hat, d_t, fusion, u1, s1, s1_hat, n1;
  Eigen::RowVectorXd mu, var, inv_sigma;
};

/// Evaluates the estimator head for R chains at once (one column per
/// chain). h1_cols carries each chain's text feature; y_adv_cols, when
/// non-null, is added to the corresponding column of y_t_cols. Writes
/// the predicted noise into eps_out (C x R). Mathematically identical to
/// estimator_forward; batching exists so reverse chains can share the
/// weight-matrix traffic.
void estimator_head_batch(const Matrix& y_t_cols, int t, const Matrix& h1_cols,
                          const Matrix* y_adv_cols, const EstimatorParams& p,
                          Matrix& eps_out, HeadWorkspace& ws);

}  // namespace roic
