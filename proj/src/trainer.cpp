#include "roic/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <utility>

#include "roic/diffusion.hpp"
#include "roic/errors.hpp"
#include "roic/logging.hpp"

namespace roic {

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("train config: " + msg); };
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be positive");
  if (!(lr0 > 0.0)) fail("lr0 must be positive");
  if (weight_decay < 0.0) fail("weight_decay must be >= 0");
  if (T < 2) fail("T must be >= 2");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    fail("need 0 < beta_start <= beta_end < 1");
  }
  if (eval_every < 0) fail("eval_every must be >= 0");
  if (advisor_epochs < 0) fail("advisor_epochs must be >= 0");
  if (!(advisor_lr0 > 0.0)) fail("advisor_lr0 must be positive");
  if (embed_dim < 1 || hidden_dim < 1 || feature_dim < 1) {
    fail("model dims must be positive");
  }
}

NoiseSchedule TrainConfig::schedule() const {
  return build_linear_schedule(T, beta_start, beta_end);
}

double train_step(std::span<const TextExample> batch, EstimatorParams& params,
                  const AdvisorModel* advisor, const NoiseSchedule& schedule,
                  AdamW& optimizer, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const int C = params.num_classes();
  const int T = schedule.steps();
  if (params.timesteps() != T) {
    throw std::invalid_argument("train_step: schedule does not match params");
  }

  const Index B = static_cast<Index>(batch.size());
  Matrix eps(C, B);
  Matrix eps_theta(C, B);
  EstimatorParams grads = EstimatorParams::zeros_like(params);
  EstimatorCache cache;

  for (Index i = 0; i < B; ++i) {
    const TextExample& ex = batch[i];
    const int t = 1 + rng.uniform_int(T);
    Vector noise(C);
    rng.fill_normal(noise);
    const Vector y_t = diffuse_label(one_hot(ex.label, C), t, noise, schedule);
    Vector y_adv;
    if (advisor != nullptr) y_adv = advisor_predict_soft(*advisor, ex.tokens);
    eps.col(i) = noise;
    eps_theta.col(i) = estimator_forward(
        ex.tokens, y_t, t, advisor != nullptr ? &y_adv : nullptr, params,
        &cache);
    const Vector grad_eps =
        2.0 * (eps_theta.col(i) - noise) / static_cast<double>(B * C);
    estimator_backward_accumulate(grad_eps, cache, params, grads);
  }

  const double loss = simple_loss(eps, eps_theta);
  optimizer.step(tensor_views(params), tensor_views(std::as_const(grads)));
  if (!params.all_finite()) {
    throw NumericError("train_step: non-finite parameters after update");
  }
  return loss;
}

TrainResult train(const TrainConfig& config,
                  const std::vector<TextExample>& train_set,
                  const Vocabulary& vocab,
                  const std::vector<std::string>& labels,
                  const AdvisorModel* advisor,
                  const std::vector<TextExample>* eval_set) {
  config.validate();
  if (train_set.empty()) throw ConfigError("train: empty training set");
  if (labels.size() < 2) throw ConfigError("train: need at least 2 labels");
  if (config.use_advisor != (advisor != nullptr)) {
    throw ConfigError("train: advisor presence does not match use_advisor");
  }

  const NoiseSchedule schedule = config.schedule();
  EncoderDims dims{vocab.size(), config.embed_dim, config.hidden_dim,
                   config.feature_dim};
  EstimatorParams params =
      EstimatorParams::init(static_cast<int>(labels.size()), config.T, dims,
                            derive_seed(config.seed, 10));

  const long n = static_cast<long>(train_set.size());
  const long batches_per_epoch =
      (n + config.batch_size - 1) / config.batch_size;
  AdamW::Config opt_config;
  opt_config.lr0 = config.lr0;
  opt_config.weight_decay = config.weight_decay;
  opt_config.total_steps =
      std::max<long>(1, static_cast<long>(config.epochs) * batches_per_epoch);
  AdamW optimizer(opt_config, tensor_views(params));

  Rng rng(derive_seed(config.seed, 11));
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TextExample> batch;
  batch.reserve(config.batch_size);

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (long start = 0; start < n; start += config.batch_size) {
      const long end = std::min<long>(n, start + config.batch_size);
      batch.clear();
      for (long i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
      const double loss =
          train_step(batch, params, advisor, schedule, optimizer, rng);
      epoch_loss += loss * static_cast<double>(end - start);
    }
    epoch_loss /= static_cast<double>(n);
    result.loss_curve.push_back(epoch_loss);
    log_debug("epoch " + std::to_string(epoch + 1) + "/" +
              std::to_string(config.epochs) +
              " loss=" + std::to_string(epoch_loss));
    if (config.eval_every > 0 && eval_set != nullptr &&
        (epoch + 1) % config.eval_every == 0) {
      // Accuracy logging hooks in the CLI use the sampler; here we only
      // report the loss to keep the trainer free of a sampler dependency.
      log_info("epoch " + std::to_string(epoch + 1) +
               " mean loss " + std::to_string(epoch_loss));
    }
  }

  Checkpoint& ckpt = result.checkpoint;
  ckpt.config = config;
  ckpt.labels = labels;
  ckpt.vocab = vocab.tokens();
  ckpt.estimator = std::move(params);
  if (advisor != nullptr) ckpt.advisor = *advisor;
  ckpt.opt_m = optimizer.first_moments();
  ckpt.opt_v = optimizer.second_moments();
  ckpt.opt_step = optimizer.step_count();
  ckpt.rng_state = rng.serialize();
  ckpt.epoch = config.epochs;
  return result;
}

PipelineResult train_pipeline(const TrainConfig& config,
                              std::vector<TextExample> train_raw,
                              const std::vector<std::string>& labels,
                              int vocab_min_freq,
                              const std::vector<TextExample>* eval_set) {
  config.validate();
  PipelineResult result;
  result.vocabulary = Vocabulary::build(train_raw, vocab_min_freq);
  encode_examples(result.vocabulary, train_raw);

  std::optional<AdvisorModel> advisor;
  if (config.use_advisor) {
    AdvisorTrainConfig advisor_config;
    advisor_config.epochs = config.advisor_epochs;
    advisor_config.batch_size = config.batch_size;
    advisor_config.lr0 = config.advisor_lr0;
    advisor_config.weight_decay = config.weight_decay;
    advisor_config.dims = EncoderDims{result.vocabulary.size(),
                                      config.embed_dim, config.hidden_dim,
                                      config.feature_dim};
    advisor_config.seed = config.seed;
    advisor = advisor_train(train_raw, static_cast<int>(labels.size()),
                            advisor_config, &result.advisor_loss_curve);
  }

  std::vector<TextExample> encoded_eval;
  if (eval_set != nullptr) {
    encoded_eval = *eval_set;
    encode_examples(result.vocabulary, encoded_eval);
  }
  TrainResult trained =
      train(config, train_raw, result.vocabulary, labels,
            advisor ? &*advisor : nullptr,
            eval_set != nullptr ? &encoded_eval : nullptr);
  result.checkpoint = std::move(trained.checkpoint);
  result.loss_curve = std::move(trained.loss_curve);
  return result;
}

void save_loss_curve(const std::string& path,
                     const std::vector<double>& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write loss curve: " + path);
  out << "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, curve[i]);
    out << buf;
  }
  if (!out) throw IoError("failed writing loss curve: " + path);
}

}  // namespace roic
