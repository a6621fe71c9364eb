#include "roic/advisor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "roic/errors.hpp"
#include "roic/optimizer.hpp"

namespace roic {

namespace {

template <class P, class F>
void enumerate_advisor(P& p, F&& f) {
  detail::for_each_encoder_tensor(p.encoder, f);
  f("head_w", p.head_w);
  f("head_b", p.head_b);
}

Vector softmax(const Vector& logits) {
  const Vector shifted = logits.array() - logits.maxCoeff();
  Vector expd = shifted.array().exp();
  return expd / expd.sum();
}

}  // namespace

std::vector<TensorView> tensor_views(AdvisorModel& m) {
  std::vector<TensorView> v;
  enumerate_advisor(m, [&](const char* n, auto& t) { detail::push_view(v, n, t); });
  return v;
}

std::vector<ConstTensorView> tensor_views(const AdvisorModel& m) {
  std::vector<ConstTensorView> v;
  enumerate_advisor(m, [&](const char* n, auto& t) { detail::push_view(v, n, t); });
  return v;
}

AdvisorModel AdvisorModel::init(int num_classes, const EncoderDims& dims,
                                std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("need at least 2 classes");
  Rng rng(seed);
  AdvisorModel m;
  m.encoder = EncoderParams::init(dims, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dims.feature_dim));
  m.head_w = Matrix(num_classes, dims.feature_dim);
  for (Index c = 0; c < m.head_w.cols(); ++c) {
    for (Index r = 0; r < m.head_w.rows(); ++r) {
      m.head_w(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
    }
  }
  m.head_b = Vector::Zero(num_classes);
  return m;
}

bool AdvisorModel::all_finite() const {
  return encoder.all_finite() && head_w.allFinite() && head_b.allFinite();
}

Vector advisor_logits(const AdvisorModel& m, std::span<const int> tokens) {
  return m.head_w * encode_forward(tokens, m.encoder) + m.head_b;
}

Vector advisor_predict_soft(const AdvisorModel& m,
                            std::span<const int> tokens) {
  return softmax(advisor_logits(m, tokens));
}

int advisor_predict(const AdvisorModel& m, std::span<const int> tokens) {
  return argmax_lowest(advisor_logits(m, tokens));
}

double advisor_example_gradients(const AdvisorModel& m, const TextExample& ex,
                                 double scale, AdvisorModel& grads) {
  EncoderCache cache;
  const Vector h1 = encode_forward(ex.tokens, m.encoder, &cache);
  const Vector probs = softmax(m.head_w * h1 + m.head_b);
  if (ex.label < 0 || ex.label >= m.num_classes()) {
    throw std::out_of_range("advisor gradients: label out of range");
  }
  Vector g_logits = probs * scale;
  g_logits[ex.label] -= scale;
  grads.head_b += g_logits;
  grads.head_w.noalias() += g_logits * h1.transpose();
  const Vector g_h1 = m.head_w.transpose() * g_logits;
  encode_backward_accumulate(g_h1, cache, m.encoder, grads.encoder);
  return -std::log(std::max(probs[ex.label], 1e-300));
}

AdvisorModel advisor_train(const std::vector<TextExample>& train,
                           int num_classes, const AdvisorTrainConfig& config,
                           std::vector<double>* loss_curve) {
  if (train.empty()) {
    throw std::invalid_argument("advisor_train: empty training set");
  }
  if (config.epochs < 0 || config.batch_size < 1) {
    throw ConfigError("advisor_train: bad epochs or batch size");
  }

  AdvisorModel model =
      AdvisorModel::init(num_classes, config.dims, derive_seed(config.seed, 1));
  AdvisorModel grads = model;  // same shapes; zeroed below per batch
  const std::vector<TensorView> param_views = tensor_views(model);
  const std::vector<TensorView> grad_views = tensor_views(grads);

  const long n = static_cast<long>(train.size());
  const long batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  AdamW::Config opt_config;
  opt_config.lr0 = config.lr0;
  opt_config.weight_decay = config.weight_decay;
  opt_config.total_steps = std::max<long>(1, config.epochs * batches_per_epoch);
  AdamW optimizer(opt_config, param_views);

  Rng rng(derive_seed(config.seed, 2));
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  if (loss_curve != nullptr) loss_curve->clear();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (long start = 0; start < n; start += config.batch_size) {
      const long end = std::min<long>(n, start + config.batch_size);
      const double batch_n = static_cast<double>(end - start);
      for (const TensorView& g : grad_views) g.flat().setZero();
      for (long i = start; i < end; ++i) {
        epoch_loss += advisor_example_gradients(model, train[order[i]],
                                               1.0 / batch_n, grads);
      }
      optimizer.step(param_views, tensor_views(std::as_const(grads)));
    }
    if (!model.all_finite()) {
      throw NumericError("advisor_train: non-finite parameters at epoch " +
                         std::to_string(epoch + 1));
    }
    if (loss_curve != nullptr) {
      loss_curve->push_back(epoch_loss / static_cast<double>(n));
    }
  }
  return model;
}

double advisor_accuracy(const AdvisorModel& m,
                        const std::vector<TextExample>& examples) {
  if (examples.empty()) return 0.0;
  long correct = 0;
  for (const TextExample& ex : examples) {
    if (advisor_predict(m, ex.tokens) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace roic
