#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roic/advisor.hpp"
#include "roic/estimator.hpp"
#include "roic/optimizer.hpp"
#include "roic/schedule.hpp"
#include "roic/text.hpp"

namespace roic {

inline constexpr int kCheckpointSchemaVersion = 1;

struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double lr0 = 1e-4;
  double weight_decay = 0.01;
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  bool use_advisor = true;
  std::uint64_t seed = 1;
  int eval_every = 0;  // 0 disables periodic evaluation
  int advisor_epochs = 10;
  double advisor_lr0 = 1e-3;
  int embed_dim = 64;    // d_e
  int hidden_dim = 128;  // d_h
  int feature_dim = 128; // d

  void validate() const;
  NoiseSchedule schedule() const;
};

/// Everything needed to resume or serve a trained model. Round-trips
/// losslessly through the JSON checkpoint format.
struct Checkpoint {
  int schema_version = kCheckpointSchemaVersion;
  TrainConfig config;
  std::vector<std::string> labels;
  std::vector<std::string> vocab;  // id -> token
  EstimatorParams estimator;
  std::optional<AdvisorModel> advisor;
  std::vector<Vector> opt_m;
  std::vector<Vector> opt_v;
  long opt_step = 0;
  std::string rng_state;
  int epoch = 0;
};

/// One mini-batch update of the denoiser. Per example: draws t uniform
/// in {1..T} and eps ~ N(0, I), noises the one-hot label, predicts the
/// noise (adding the advisor soft label when given) and takes one
/// optimizer step on the mean squared noise error. Returns the batch
/// loss. The advisor, when present, stays frozen.
double train_step(std::span<const TextExample> batch, EstimatorParams& params,
                  const AdvisorModel* advisor, const NoiseSchedule& schedule,
                  AdamW& optimizer, Rng& rng);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<double> loss_curve;  // mean loss per epoch
};

/// Runs `epochs` passes of shuffled mini-batches. Bit-deterministic
/// given (seed, config, dataset). Examples must already be encoded.
/// eval_set, when given together with config.eval_every > 0, triggers
/// periodic accuracy logging.
TrainResult train(const TrainConfig& config,
                  const std::vector<TextExample>& train_set,
                  const Vocabulary& vocab,
                  const std::vector<std::string>& labels,
                  const AdvisorModel* advisor,
                  const std::vector<TextExample>* eval_set = nullptr);

struct PipelineResult {
  Checkpoint checkpoint;
  std::vector<double> loss_curve;
  std::vector<double> advisor_loss_curve;
  Vocabulary vocabulary;
};

/// Full training pipeline over raw (unencoded) examples: builds the
/// vocabulary, encodes, trains the advisor when config.use_advisor is
/// set, then trains the denoiser conditioned on it.
PipelineResult train_pipeline(const TrainConfig& config,
                              std::vector<TextExample> train_raw,
                              const std::vector<std::string>& labels,
                              int vocab_min_freq = 1,
                              const std::vector<TextExample>* eval_set = nullptr);

/// Writes `epoch,mean_loss` rows for each epoch.
void save_loss_curve(const std::string& path,
                     const std::vector<double>& curve);

}  // namespace roic
