#pragma once

#include <cstdint>
#include <span>

#include "roic/encoder.hpp"
#include "roic/tensor.hpp"
#include "roic/text.hpp"

namespace roic {

/// Conventional softmax text classifier: the same encoder family plus a
/// linear head. Trained first and then frozen, it supplies the soft
/// labels that condition the denoiser.
struct AdvisorModel {
  EncoderParams encoder;
  Matrix head_w;  // C x d
  Vector head_b;  // C

  int num_classes() const { return static_cast<int>(head_w.rows()); }

  static AdvisorModel init(int num_classes, const EncoderDims& dims,
                           std::uint64_t seed);
  bool all_finite() const;
};

std::vector<TensorView> tensor_views(AdvisorModel& m);
std::vector<ConstTensorView> tensor_views(const AdvisorModel& m);

Vector advisor_logits(const AdvisorModel& m, std::span<const int> tokens);

/// Softmax class probabilities: nonnegative, summing to 1.
Vector advisor_predict_soft(const AdvisorModel& m, std::span<const int> tokens);

int advisor_predict(const AdvisorModel& m, std::span<const int> tokens);

/// Cross-entropy loss of one example; exact parameter gradients scaled
/// by `scale` are accumulated into `grads` (shaped like the model).
double advisor_example_gradients(const AdvisorModel& m, const TextExample& ex,
                                 double scale, AdvisorModel& grads);

struct AdvisorTrainConfig {
  int epochs = 10;
  int batch_size = 64;
  double lr0 = 1e-3;
  double weight_decay = 0.01;
  EncoderDims dims;  // vocab_size filled by the caller
  std::uint64_t seed = 1;
};

/// Minimizes cross-entropy with the shared optimizer contract (adaptive
/// moments, decoupled weight decay, linearly decayed learning rate).
/// Deterministic given the seed. Examples must be encoded already.
AdvisorModel advisor_train(const std::vector<TextExample>& train,
                           int num_classes, const AdvisorTrainConfig& config,
                           std::vector<double>* loss_curve = nullptr);

/// Fraction of examples whose argmax prediction matches the label.
double advisor_accuracy(const AdvisorModel& m,
                        const std::vector<TextExample>& examples);

}  // namespace roic
