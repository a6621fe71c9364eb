#include "roic/sampler.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "roic/diffusion.hpp"
#include "roic/errors.hpp"
#include "roic/rng.hpp"

namespace roic {

namespace {

void reject_untrained(const EstimatorParams& params) {
  if (params.proj_w1.isZero(0.0) && params.proj_w2.isZero(0.0)) {
    throw ConfigError(
        "estimator projector weights are all zero; parameters look untrained");
  }
}

struct ChainBatch {
  Matrix y;      // C x R, current states
  Matrix h1;     // d x R
  Matrix y_adv;  // C x R, filled only when an advisor is present
  std::vector<Rng> rngs;
};

/// Runs the full reverse chain for R prepared columns in lockstep.
/// `observe`, when non-null, sees column `observe_col` after every step.
template <class Observer>
void run_reverse_chains(ChainBatch& batch, const EstimatorParams& params,
                        const NoiseSchedule& schedule, bool has_advisor,
                        bool literal_variance_noise, Observer&& observe) {
  const int T = schedule.steps();
  const Index R = batch.y.cols();
  const int C = static_cast<int>(batch.y.rows());

  HeadWorkspace ws;
  Matrix eps(C, R);
  Matrix y0_hat(C, R);
  Matrix zeta(C, R);
  Vector column(C);

  for (int t = T; t >= 1; --t) {
    estimator_head_batch(batch.y, t, batch.h1,
                         has_advisor ? &batch.y_adv : nullptr, params, eps,
                         ws);
    y0_hat = (batch.y - schedule.sqrt_one_minus_alpha_bar(t) * eps) /
             schedule.sqrt_alpha_bar(t);
    const PosteriorCoeffs coeffs =
        posterior_coeffs(t, schedule, literal_variance_noise);
    if (t > 1) {
      for (Index j = 0; j < R; ++j) {
        batch.rngs[j].fill_normal(column);
        zeta.col(j) = column;
      }
    } else {
      zeta.setZero();
    }
    batch.y = coeffs.y0_coef * y0_hat + coeffs.yt_coef * batch.y +
              coeffs.sigma * zeta;
    observe(T - t + 1, t - 1, batch.y);
  }
}

void no_observe(int, int, const Matrix&) {}

}  // namespace

ClassifyResult classify(std::span<const int> tokens,
                        const EstimatorParams& params,
                        const NoiseSchedule& schedule,
                        const AdvisorModel* advisor,
                        const ClassifyOptions& options) {
  if (options.n_runs < 1) {
    throw std::invalid_argument("classify: n_runs must be >= 1");
  }
  if (schedule.steps() != params.timesteps()) {
    throw std::invalid_argument("classify: schedule does not match params");
  }
  reject_untrained(params);

  const int C = params.num_classes();
  const int T = schedule.steps();
  const Index R = options.n_runs;

  ChainBatch batch;
  const Vector h1 = encode_forward(tokens, params.encoder);
  batch.h1 = h1.replicate(1, R);
  if (advisor != nullptr) {
    const Vector y_adv = advisor_predict_soft(*advisor, tokens);
    batch.y_adv = y_adv.replicate(1, R);
  }
  batch.y.resize(C, R);
  Vector column(C);
  for (Index r = 0; r < R; ++r) {
    batch.rngs.emplace_back(derive_seed(options.seed, r));
    batch.rngs.back().fill_normal(column);
    batch.y.col(r) = column;
  }

  ClassifyResult result;
  const int stride = std::max(1, T / 100);
  if (options.record_trajectory) {
    result.trajectory.push_back({0, T, batch.y.col(0)});
  }
  auto observe = [&](int step, int t, const Matrix& y) {
    if (options.record_trajectory && (step % stride == 0 || t == 0)) {
      result.trajectory.push_back({step, t, y.col(0)});
    }
  };
  run_reverse_chains(batch, params, schedule, advisor != nullptr,
                     options.literal_variance_noise, observe);

  result.scores = batch.y.rowwise().mean();
  result.label = argmax_lowest(result.scores);
  return result;
}

std::vector<Vector> classify_scores_batch(
    std::span<const std::vector<int>> inputs, const EstimatorParams& params,
    const NoiseSchedule& schedule, const AdvisorModel* advisor,
    std::span<const std::uint64_t> seeds, int n_runs,
    bool literal_variance_noise) {
  if (inputs.size() != seeds.size()) {
    throw std::invalid_argument("classify_scores_batch: seed count mismatch");
  }
  if (n_runs < 1) {
    throw std::invalid_argument("classify_scores_batch: n_runs must be >= 1");
  }
  reject_untrained(params);

  const int C = params.num_classes();
  const std::size_t inputs_per_chunk =
      std::max<std::size_t>(1, kMaxChainsPerBatch / n_runs);

  std::vector<Vector> scores(inputs.size());
  Vector column(C);
  for (std::size_t begin = 0; begin < inputs.size();
       begin += inputs_per_chunk) {
    const std::size_t end =
        std::min(inputs.size(), begin + inputs_per_chunk);
    const Index R = static_cast<Index>((end - begin) * n_runs);

    ChainBatch batch;
    batch.h1.resize(params.feature_dim(), R);
    if (advisor != nullptr) batch.y_adv.resize(C, R);
    batch.y.resize(C, R);
    for (std::size_t i = begin; i < end; ++i) {
      const Index base = static_cast<Index>((i - begin) * n_runs);
      const Vector h1 = encode_forward(inputs[i], params.encoder);
      Vector y_adv;
      if (advisor != nullptr) y_adv = advisor_predict_soft(*advisor, inputs[i]);
      for (int r = 0; r < n_runs; ++r) {
        batch.h1.col(base + r) = h1;
        if (advisor != nullptr) batch.y_adv.col(base + r) = y_adv;
        batch.rngs.emplace_back(derive_seed(seeds[i], r));
        batch.rngs.back().fill_normal(column);
        batch.y.col(base + r) = column;
      }
    }

    run_reverse_chains(batch, params, schedule, advisor != nullptr,
                       literal_variance_noise, no_observe);

    for (std::size_t i = begin; i < end; ++i) {
      const Index base = static_cast<Index>((i - begin) * n_runs);
      scores[i] = batch.y.middleCols(base, n_runs).rowwise().mean();
    }
  }
  return scores;
}

double score_margin(const Vector& scores, int true_label) {
  if (true_label < 0 || true_label >= scores.size()) {
    throw std::out_of_range("score_margin: label outside score vector");
  }
  double best_other = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < scores.size(); ++i) {
    if (i != true_label) best_other = std::max(best_other, scores[i]);
  }
  return scores[true_label] - best_other;
}

double clean_accuracy(const std::vector<TextExample>& examples,
                      const EstimatorParams& params,
                      const NoiseSchedule& schedule,
                      const AdvisorModel* advisor, std::uint64_t seed,
                      int n_runs) {
  if (examples.empty()) return 0.0;
  std::vector<std::vector<int>> inputs;
  std::vector<std::uint64_t> seeds;
  inputs.reserve(examples.size());
  seeds.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    inputs.push_back(examples[i].tokens);
    seeds.push_back(derive_seed(seed, i));
  }
  const std::vector<Vector> scores = classify_scores_batch(
      inputs, params, schedule, advisor, seeds, n_runs);
  long correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (argmax_lowest(scores[i]) == examples[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryPoint>& trajectory) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trajectory: " + path);
  const Index C = trajectory.empty() ? 0 : trajectory.front().y.size();
  out << "step,t";
  for (Index c = 0; c < C; ++c) out << ",component_" << c;
  out << "\n";
  char buf[64];
  for (const TrajectoryPoint& point : trajectory) {
    out << point.step << "," << point.t;
    for (Index c = 0; c < C; ++c) {
      std::snprintf(buf, sizeof(buf), ",%.17g", point.y[c]);
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing trajectory: " + path);
}

}  // namespace roic
