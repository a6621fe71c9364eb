#include "roic/estimator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace roic {

namespace {

template <class P, class F>
void enumerate_estimator(P& p, F&& f) {
  detail::for_each_encoder_tensor(p.encoder, f);
  f("time_table", p.time_table);
  f("y_proj_w", p.y_proj_w);
  f("y_proj_b", p.y_proj_b);
  f("smoother_gain", p.smoother_gain);
  f("smoother_bias", p.smoother_bias);
  f("proj_w1", p.proj_w1);
  f("proj_b1", p.proj_b1);
  f("proj_ln_gain", p.proj_ln_gain);
  f("proj_ln_bias", p.proj_ln_bias);
  f("proj_w2", p.proj_w2);
  f("proj_b2", p.proj_b2);
}

Matrix uniform_fan_in(Index rows, Index cols, Index fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) {
      m(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
    }
  }
  return m;
}

/// Layer norm with affine parameters; returns the normalized vector and
/// 1/sigma through out-params for the backward pass.
Vector layer_norm(const Vector& x, const Vector& gain, const Vector& bias,
                  Vector& x_hat, double& inv_sigma) {
  const double mu = x.mean();
  const Vector centered = x.array() - mu;
  const double var = centered.squaredNorm() / static_cast<double>(x.size());
  inv_sigma = 1.0 / std::sqrt(var + kLayerNormEps);
  x_hat = centered * inv_sigma;
  return (gain.array() * x_hat.array() + bias.array()).matrix();
}

/// Backward of layer_norm w.r.t. its input:
///   g_x = inv_sigma * (g_hat - mean(g_hat) - x_hat * mean(g_hat . x_hat))
Vector layer_norm_backward_input(const Vector& grad_x_hat, const Vector& x_hat,
                                 double inv_sigma) {
  const double m1 = grad_x_hat.mean();
  const double m2 = grad_x_hat.dot(x_hat) / static_cast<double>(x_hat.size());
  return inv_sigma *
         (grad_x_hat.array() - m1 - x_hat.array() * m2).matrix();
}

}  // namespace

std::vector<TensorView> tensor_views(EstimatorParams& p) {
  std::vector<TensorView> v;
  enumerate_estimator(p, [&](const char* n, auto& t) { detail::push_view(v, n, t); });
  return v;
}

std::vector<ConstTensorView> tensor_views(const EstimatorParams& p) {
  std::vector<ConstTensorView> v;
  enumerate_estimator(p, [&](const char* n, auto& t) { detail::push_view(v, n, t); });
  return v;
}

EstimatorParams EstimatorParams::init(int num_classes, int timesteps,
                                      const EncoderDims& dims,
                                      std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (timesteps < 1) throw std::invalid_argument("need at least 1 timestep");
  Rng rng(seed);
  const int d = dims.feature_dim;

  EstimatorParams p;
  p.encoder = EncoderParams::init(dims, rng);
  p.time_table = Matrix(d, timesteps + 1);
  for (Index c = 0; c < p.time_table.cols(); ++c) {
    for (Index r = 0; r < d; ++r) p.time_table(r, c) = 0.02 * rng.normal();
  }
  p.y_proj_w = uniform_fan_in(d, num_classes, num_classes, rng);
  p.y_proj_b = Vector::Zero(d);
  p.smoother_gain = Vector::Ones(d);
  p.smoother_bias = Vector::Zero(d);
  p.proj_w1 = uniform_fan_in(d, d, d, rng);
  p.proj_b1 = Vector::Zero(d);
  p.proj_ln_gain = Vector::Ones(d);
  p.proj_ln_bias = Vector::Zero(d);
  // Zero final layer: the untrained estimator predicts zero noise.
  p.proj_w2 = Matrix::Zero(num_classes, d);
  p.proj_b2 = Vector::Zero(num_classes);
  return p;
}

EstimatorParams EstimatorParams::zeros_like(const EstimatorParams& p) {
  EstimatorParams z;
  z.encoder = EncoderParams::zeros_like(p.encoder);
  z.time_table = Matrix::Zero(p.time_table.rows(), p.time_table.cols());
  z.y_proj_w = Matrix::Zero(p.y_proj_w.rows(), p.y_proj_w.cols());
  z.y_proj_b = Vector::Zero(p.y_proj_b.size());
  z.smoother_gain = Vector::Zero(p.smoother_gain.size());
  z.smoother_bias = Vector::Zero(p.smoother_bias.size());
  z.proj_w1 = Matrix::Zero(p.proj_w1.rows(), p.proj_w1.cols());
  z.proj_b1 = Vector::Zero(p.proj_b1.size());
  z.proj_ln_gain = Vector::Zero(p.proj_ln_gain.size());
  z.proj_ln_bias = Vector::Zero(p.proj_ln_bias.size());
  z.proj_w2 = Matrix::Zero(p.proj_w2.rows(), p.proj_w2.cols());
  z.proj_b2 = Vector::Zero(p.proj_b2.size());
  return z;
}

std::size_t EstimatorParams::parameter_count() const {
  std::size_t n = 0;
  for (const ConstTensorView& v : tensor_views(*this)) {
    n += static_cast<std::size_t>(v.size());
  }
  return n;
}

bool EstimatorParams::all_finite() const {
  for (const ConstTensorView& v : tensor_views(*this)) {
    if (!v.flat().allFinite()) return false;
  }
  return true;
}

Vector estimator_forward(std::span<const int> tokens, const Vector& y_t, int t,
                         const Vector* y_adv, const EstimatorParams& p,
                         EstimatorCache* cache) {
  const int C = p.num_classes();
  if (t < 1 || t > p.timesteps()) {
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [1, " +
                            std::to_string(p.timesteps()) + "]");
  }
  if (y_t.size() != C) {
    throw std::invalid_argument("estimator_forward: y_t dimension mismatch");
  }
  if (y_adv != nullptr && y_adv->size() != C) {
    throw std::invalid_argument("estimator_forward: y_adv dimension mismatch");
  }

  EncoderCache* enc_cache = cache ? &cache->enc : nullptr;
  const Vector h1 = encode_forward(tokens, p.encoder, enc_cache);

  const Vector y_in = y_adv ? Vector(y_t + *y_adv) : y_t;
  const Vector lin = p.y_proj_w * y_in + p.y_proj_b;
  const Vector e = (p.time_table.col(t).array() * lin.array()).matrix();
  const Vector sp = softplus(e.array()).matrix();
  Vector sp_hat;
  double sm_inv_sigma;
  const Vector d_t =
      layer_norm(sp, p.smoother_gain, p.smoother_bias, sp_hat, sm_inv_sigma);
  const Vector fusion = (d_t.array() * h1.array()).matrix();
  const Vector u1 = p.proj_w1 * fusion + p.proj_b1;
  const Vector s1 = softplus(u1.array()).matrix();
  Vector s1_hat;
  double pr_inv_sigma;
  const Vector n1 =
      layer_norm(s1, p.proj_ln_gain, p.proj_ln_bias, s1_hat, pr_inv_sigma);
  Vector eps = p.proj_w2 * n1 + p.proj_b2;

  if (cache != nullptr) {
    cache->valid = true;
    cache->params = &p;
    cache->t = t;
    cache->h1 = h1;
    cache->y_in = y_in;
    cache->e = e;
    cache->sp = sp;
    cache->sp_hat = std::move(sp_hat);
    cache->sm_inv_sigma = sm_inv_sigma;
    cache->d_t = d_t;
    cache->fusion = fusion;
    cache->u1 = u1;
    cache->s1 = s1;
    cache->s1_hat = std::move(s1_hat);
    cache->pr_inv_sigma = pr_inv_sigma;
    cache->n1 = std::move(n1);
  }
  return eps;
}

void estimator_backward_accumulate(const Vector& grad_eps,
                                   const EstimatorCache& cache,
                                   const EstimatorParams& p,
                                   EstimatorParams& grads) {
  if (!cache.valid || cache.params != &p) {
    throw std::logic_error("estimator_backward: stale or mismatched cache");
  }
  if (grad_eps.size() != p.num_classes()) {
    throw std::invalid_argument(
        "estimator_backward: gradient dimension mismatch");
  }

  // Final projection.
  grads.proj_b2 += grad_eps;
  grads.proj_w2.noalias() += grad_eps * cache.n1.transpose();
  const Vector g_n1 = p.proj_w2.transpose() * grad_eps;

  // Projector layer norm.
  grads.proj_ln_gain += (g_n1.array() * cache.s1_hat.array()).matrix();
  grads.proj_ln_bias += g_n1;
  const Vector g_s1_hat = (g_n1.array() * p.proj_ln_gain.array()).matrix();
  const Vector g_s1 =
      layer_norm_backward_input(g_s1_hat, cache.s1_hat, cache.pr_inv_sigma);

  // Softplus and first projector layer.
  const Vector g_u1 =
      (g_s1.array() * sigmoid(cache.u1.array())).matrix();
  grads.proj_b1 += g_u1;
  grads.proj_w1.noalias() += g_u1 * cache.fusion.transpose();
  const Vector g_fusion = p.proj_w1.transpose() * g_u1;

  // Fusion with the text feature.
  const Vector g_d_t = (g_fusion.array() * cache.h1.array()).matrix();
  const Vector g_h1 = (g_fusion.array() * cache.d_t.array()).matrix();

  // Smoother layer norm.
  grads.smoother_gain += (g_d_t.array() * cache.sp_hat.array()).matrix();
  grads.smoother_bias += g_d_t;
  const Vector g_sp_hat = (g_d_t.array() * p.smoother_gain.array()).matrix();
  const Vector g_sp =
      layer_norm_backward_input(g_sp_hat, cache.sp_hat, cache.sm_inv_sigma);

  // Softplus and the time/label fusion.
  const Vector g_e = (g_sp.array() * sigmoid(cache.e.array())).matrix();
  const Vector lin = p.y_proj_w * cache.y_in + p.y_proj_b;
  grads.time_table.col(cache.t) += (g_e.array() * lin.array()).matrix();
  const Vector g_lin =
      (g_e.array() * p.time_table.col(cache.t).array()).matrix();

  // Label projection.
  grads.y_proj_b += g_lin;
  grads.y_proj_w.noalias() += g_lin * cache.y_in.transpose();

  encode_backward_accumulate(g_h1, cache.enc, p.encoder, grads.encoder);
}

EstimatorParams estimator_backward(const Vector& grad_eps,
                                   const EstimatorCache& cache,
                                   const EstimatorParams& p) {
  EstimatorParams grads = EstimatorParams::zeros_like(p);
  estimator_backward_accumulate(grad_eps, cache, p, grads);
  return grads;
}

void estimator_head_batch(const Matrix& y_t_cols, int t, const Matrix& h1_cols,
                          const Matrix* y_adv_cols, const EstimatorParams& p,
                          Matrix& eps_out, HeadWorkspace& ws) {
  const Index R = y_t_cols.cols();
  const int d = p.feature_dim();
  if (t < 1 || t > p.timesteps()) {
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [1, " +
                            std::to_string(p.timesteps()) + "]");
  }
  if (y_t_cols.rows() != p.num_classes() || h1_cols.rows() != d ||
      h1_cols.cols() != R ||
      (y_adv_cols != nullptr &&
       (y_adv_cols->rows() != y_t_cols.rows() || y_adv_cols->cols() != R))) {
    throw std::invalid_argument("estimator_head_batch: shape mismatch");
  }

  if (y_adv_cols != nullptr) {
    ws.y_in = y_t_cols + *y_adv_cols;
  } else {
    ws.y_in = y_t_cols;
  }
  ws.lin.noalias() = p.y_proj_w * ws.y_in;
  ws.lin.colwise() += p.y_proj_b;
  ws.sp = ws.lin.array().colwise() * p.time_table.col(t).array();  // e
  ws.sp = softplus(ws.sp.array()).matrix();

  auto layer_norm_cols = [&](const Matrix& x, Matrix& x_hat,
                             const Vector& gain, const Vector& bias,
                             Matrix& out) {
    ws.mu = x.colwise().mean();
    x_hat = x.rowwise() - ws.mu;
    ws.var = x_hat.array().square().colwise().mean();
    ws.inv_sigma = (ws.var.array() + kLayerNormEps).sqrt().inverse();
    x_hat = x_hat.array().rowwise() * ws.inv_sigma.array();
    out = (x_hat.array().colwise() * gain.array()).colwise() + bias.array();
  };

  layer_norm_cols(ws.sp, ws.sp_hat, p.smoother_gain, p.smoother_bias, ws.d_t);
  ws.fusion = ws.d_t.array() * h1_cols.array();
  ws.u1.noalias() = p.proj_w1 * ws.fusion;
  ws.u1.colwise() += p.proj_b1;
  ws.s1 = softplus(ws.u1.array()).matrix();
  layer_norm_cols(ws.s1, ws.s1_hat, p.proj_ln_gain, p.proj_ln_bias, ws.n1);
  eps_out.noalias() = p.proj_w2 * ws.n1;
  eps_out.colwise() += p.proj_b2;
}

}  // namespace roic
