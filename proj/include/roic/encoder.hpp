#pragma once

#include <span>

#include "roic/linalg.hpp"
#include "roic/rng.hpp"
#include "roic/tensor.hpp"

namespace roic {

struct EncoderDims {
  int vocab_size = 0;
  int embed_dim = 64;    // d_e
  int hidden_dim = 128;  // d_h
  int feature_dim = 128; // d
};

/// Embedding -> masked mean pool -> two-layer tanh MLP. Stands in for a
/// pre-trained contextual encoder at this scale; the pooled-feature
/// design keeps every gradient hand-derivable.
///
/// The embedding stores one column per token id. Biases start at zero,
/// weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
struct EncoderParams {
  Matrix embedding;  // d_e x vocab
  Matrix w1;         // d_h x d_e
  Vector b1;         // d_h
  Matrix w2;         // d x d_h
  Vector b2;         // d

  int vocab_size() const { return static_cast<int>(embedding.cols()); }
  int feature_dim() const { return static_cast<int>(w2.rows()); }

  static EncoderParams init(const EncoderDims& dims, Rng& rng);
  static EncoderParams zeros_like(const EncoderParams& p);

  bool all_finite() const;
};

namespace detail {

/// Fixed tensor enumeration shared by the optimizer, checkpoints and
/// the composite parameter structs embedding an encoder.
template <class P, class F>
void for_each_encoder_tensor(P& p, F&& f) {
  f("encoder.embedding", p.embedding);
  f("encoder.w1", p.w1);
  f("encoder.b1", p.b1);
  f("encoder.w2", p.w2);
  f("encoder.b2", p.b2);
}

}  // namespace detail

std::vector<TensorView> tensor_views(EncoderParams& p);
std::vector<ConstTensorView> tensor_views(const EncoderParams& p);

struct EncoderCache {
  bool valid = false;
  const EncoderParams* params = nullptr;
  std::vector<int> tokens;
  int pooled_count = 0;  // non-PAD tokens contributing to the mean
  Vector pooled;         // d_e
  Vector a1;             // tanh activations, d_h
};

/// h1 = w2 * tanh(w1 * meanpool(embedding[tokens]) + b1) + b2.
/// PAD ids are excluded from the mean. Throws std::out_of_range for ids
/// outside the vocabulary. Pass a cache to enable encode_backward.
Vector encode_forward(std::span<const int> tokens, const EncoderParams& p,
                      EncoderCache* cache = nullptr);

/// Exact parameter gradients of grad_h1 . h1. Embedding gradients
/// accumulate only into the columns of tokens present in the cached
/// forward pass. Throws std::logic_error on a stale or mismatched cache.
EncoderParams encode_backward(const Vector& grad_h1, const EncoderCache& cache,
                              const EncoderParams& p);

/// As encode_backward but adds into `grads` (shaped like p) instead of
/// allocating; used by the training loop to fold a batch.
void encode_backward_accumulate(const Vector& grad_h1,
                                const EncoderCache& cache,
                                const EncoderParams& p, EncoderParams& grads);

}  // namespace roic
