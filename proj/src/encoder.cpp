#include "roic/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "roic/text.hpp"

namespace roic {

namespace {

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

}  // namespace

EncoderParams EncoderParams::init(const EncoderDims& dims, Rng& rng) {
  if (dims.vocab_size < 2 || dims.embed_dim < 1 || dims.hidden_dim < 1 ||
      dims.feature_dim < 1) {
    throw std::invalid_argument("encoder dims must be positive (vocab >= 2)");
  }
  EncoderParams p;
  p.embedding =
      uniform_fan_in(dims.embed_dim, dims.vocab_size, dims.embed_dim, rng);
  p.w1 = uniform_fan_in(dims.hidden_dim, dims.embed_dim, dims.embed_dim, rng);
  p.b1 = Vector::Zero(dims.hidden_dim);
  p.w2 = uniform_fan_in(dims.feature_dim, dims.hidden_dim, dims.hidden_dim, rng);
  p.b2 = Vector::Zero(dims.feature_dim);
  return p;
}

std::vector<TensorView> tensor_views(EncoderParams& p) {
  std::vector<TensorView> v;
  detail::for_each_encoder_tensor(
      p, [&](const char* n, auto& t) { detail::push_view(v, n, t); });
  return v;
}

std::vector<ConstTensorView> tensor_views(const EncoderParams& p) {
  std::vector<ConstTensorView> v;
  detail::for_each_encoder_tensor(
      p, [&](const char* n, auto& t) { detail::push_view(v, n, t); });
  return v;
}

EncoderParams EncoderParams::zeros_like(const EncoderParams& p) {
  EncoderParams z;
  z.embedding = Matrix::Zero(p.embedding.rows(), p.embedding.cols());
  z.w1 = Matrix::Zero(p.w1.rows(), p.w1.cols());
  z.b1 = Vector::Zero(p.b1.size());
  z.w2 = Matrix::Zero(p.w2.rows(), p.w2.cols());
  z.b2 = Vector::Zero(p.b2.size());
  return z;
}

bool EncoderParams::all_finite() const {
  return embedding.allFinite() && w1.allFinite() && b1.allFinite() &&
         w2.allFinite() && b2.allFinite();
}

Vector encode_forward(std::span<const int> tokens, const EncoderParams& p,
                      EncoderCache* cache) {
  if (tokens.empty()) {
    throw std::invalid_argument("encode_forward: empty token sequence");
  }
  Vector pooled = Vector::Zero(p.embedding.rows());
  int count = 0;
  for (int id : tokens) {
    if (id < 0 || id >= p.vocab_size()) {
      throw std::out_of_range("token id " + std::to_string(id) +
                              " outside vocabulary of size " +
                              std::to_string(p.vocab_size()));
    }
    if (id == Vocabulary::kPadId) continue;
    pooled += p.embedding.col(id);
    ++count;
  }
  if (count > 0) pooled /= static_cast<double>(count);

  Vector a1 = (p.w1 * pooled + p.b1).array().tanh().matrix();
  Vector h1 = p.w2 * a1 + p.b2;

  if (cache != nullptr) {
    cache->valid = true;
    cache->params = &p;
    cache->tokens.assign(tokens.begin(), tokens.end());
    cache->pooled_count = count;
    cache->pooled = std::move(pooled);
    cache->a1 = std::move(a1);
  }
  return h1;
}

void encode_backward_accumulate(const Vector& grad_h1,
                                const EncoderCache& cache,
                                const EncoderParams& p, EncoderParams& grads) {
  if (!cache.valid || cache.params != &p) {
    throw std::logic_error("encode_backward: stale or mismatched cache");
  }
  if (grad_h1.size() != p.b2.size()) {
    throw std::invalid_argument("encode_backward: gradient dimension mismatch");
  }
  grads.b2 += grad_h1;
  grads.w2.noalias() += grad_h1 * cache.a1.transpose();
  const Vector grad_a1 = p.w2.transpose() * grad_h1;
  const Vector grad_z1 =
      (grad_a1.array() * (1.0 - cache.a1.array().square())).matrix();
  grads.b1 += grad_z1;
  grads.w1.noalias() += grad_z1 * cache.pooled.transpose();
  if (cache.pooled_count > 0) {
    const Vector grad_pooled = (p.w1.transpose() * grad_z1) /
                               static_cast<double>(cache.pooled_count);
    for (int id : cache.tokens) {
      if (id == Vocabulary::kPadId) continue;
      grads.embedding.col(id) += grad_pooled;
    }
  }
}

EncoderParams encode_backward(const Vector& grad_h1, const EncoderCache& cache,
                              const EncoderParams& p) {
  EncoderParams grads = EncoderParams::zeros_like(p);
  encode_backward_accumulate(grad_h1, cache, p, grads);
  return grads;
}

}  // namespace roic
