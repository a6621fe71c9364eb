#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "roic/advisor.hpp"
#include "roic/estimator.hpp"
#include "roic/schedule.hpp"

namespace roic {

/// Upper bound on reverse chains evaluated per head batch; keeps the
/// per-step working set cache-friendly.
inline constexpr int kMaxChainsPerBatch = 32;

struct ClassifyOptions {
  std::uint64_t seed = 0;
  int n_runs = 1;
  bool record_trajectory = false;
  bool literal_variance_noise = false;
};

struct TrajectoryPoint {
  int step;  // reverse steps taken so far
  int t;     // timestep index of y (t = 0 is the final state)
  Vector y;
};

struct ClassifyResult {
  int label = -1;
  Vector scores;
  std::vector<TrajectoryPoint> trajectory;  // run 0 only, when requested
};

/// Classifies a text by denoising a Gaussian label vector down the full
/// reverse chain and taking the argmax (lowest index wins ties) of the
/// final state, averaged over n_runs independent chains. Run r draws
/// from a stream seeded by (seed, r), so results are reproducible and
/// independent runs never share randomness. The trajectory of run 0 is
/// recorded every max(1, T/100) steps when requested.
///
/// Rejects parameters whose projector weights are entirely zero (the
/// untrained sentinel) with a ConfigError.
ClassifyResult classify(std::span<const int> tokens,
                        const EstimatorParams& params,
                        const NoiseSchedule& schedule,
                        const AdvisorModel* advisor,
                        const ClassifyOptions& options);

/// Scores many inputs in one pass, interleaving their reverse chains so
/// the projector weights are shared across a wider batch. Input i uses
/// seeds[i] exactly as classify would use options.seed; outputs match
/// the per-input classify scores up to floating-point reassociation of
/// the shared matrix products.
std::vector<Vector> classify_scores_batch(
    std::span<const std::vector<int>> inputs, const EstimatorParams& params,
    const NoiseSchedule& schedule, const AdvisorModel* advisor,
    std::span<const std::uint64_t> seeds, int n_runs,
    bool literal_variance_noise = false);

/// scores[true_label] minus the best other component.
double score_margin(const Vector& scores, int true_label);

/// Fraction of examples classified correctly with n_runs chains; the
/// per-example seed is derived from (seed, example index).
double clean_accuracy(const std::vector<TextExample>& examples,
                      const EstimatorParams& params,
                      const NoiseSchedule& schedule,
                      const AdvisorModel* advisor, std::uint64_t seed,
                      int n_runs = 1);

/// CSV rows: step,t,component_0,...,component_{C-1}.
void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryPoint>& trajectory);

}  // namespace roic
