#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "roic/sampler.hpp"
#include "roic/text.hpp"

namespace roic {

struct AttackConfig {
  double max_perturb_ratio = 0.2;   // word budget as a fraction of length
  int max_candidates_per_word = 10;
  std::uint64_t seed = 0;
  int n_runs = 4;  // victim scoring runs per query during the attack
  int threads = 0; // 0 = hardware concurrency

  void validate() const;
};

/// Black-box scorer for one example under attack. Implementations must
/// be deterministic given their construction arguments: the diffusion
/// victim derives one fresh seed per query from (seed, example id,
/// query counter), so the greedy search sees a reproducible victim.
class Victim {
 public:
  virtual ~Victim() = default;
  virtual int num_classes() const = 0;
  virtual Vector score(const std::vector<std::string>& tokens) = 0;
  /// Scores several inputs; query counters advance in batch order.
  virtual std::vector<Vector> score_batch(
      const std::vector<std::vector<std::string>>& batch);
};

/// Creates per-example victims. Attack victims may be stochastic-but-
/// seeded; plain victims (for_attack = false) are the accuracy scorers.
class VictimFactory {
 public:
  virtual ~VictimFactory() = default;
  virtual std::unique_ptr<Victim> make(long example_id,
                                       bool for_attack) const = 0;
  virtual int num_classes() const = 0;
};

/// Victim wrapping the reverse-diffusion classifier. Attack scoring uses
/// n_runs averaged chains; plain scoring uses a single chain.
class DiffusionVictimFactory : public VictimFactory {
 public:
  DiffusionVictimFactory(const EstimatorParams& params,
                         const NoiseSchedule& schedule,
                         const AdvisorModel* advisor, const Vocabulary& vocab,
                         std::uint64_t seed, int n_runs);
  std::unique_ptr<Victim> make(long example_id, bool for_attack) const override;
  int num_classes() const override { return params_.num_classes(); }

 private:
  const EstimatorParams& params_;
  const NoiseSchedule& schedule_;
  const AdvisorModel* advisor_;
  const Vocabulary& vocab_;
  std::uint64_t seed_;
  int n_runs_;
};

/// Victim wrapping the advisor classifier directly (the conventional-
/// classifier baseline).
class AdvisorVictimFactory : public VictimFactory {
 public:
  AdvisorVictimFactory(const AdvisorModel& model, const Vocabulary& vocab)
      : model_(model), vocab_(vocab) {}
  std::unique_ptr<Victim> make(long example_id, bool for_attack) const override;
  int num_classes() const override { return model_.num_classes(); }

 private:
  const AdvisorModel& model_;
  const Vocabulary& vocab_;
};

struct WordImportance {
  int position;
  double importance;
};

/// Importance of position i = margin(original) - margin(original with
/// position i replaced by the UNK token), sorted descending with ties
/// broken by position.
std::vector<WordImportance> word_importance(
    const std::vector<std::string>& tokens, Victim& victim, int true_label);

struct AttackRecord {
  long example_id = -1;
  std::string original_text;
  std::string perturbed_text;
  int true_label = -1;
  int original_pred = -1;
  int final_pred = -1;
  int words_changed = 0;
  bool success = false;
  bool originally_correct = false;
};

/// Greedy synonym-substitution search: visit positions in importance
/// order; at each, commit the lexicon candidate that strictly lowers the
/// true-class margin the most; succeed as soon as the prediction flips;
/// give up once ceil(max_perturb_ratio * length) words are changed or
/// positions run out. Callers only invoke this on examples the victim
/// classifies correctly.
AttackRecord greedy_attack(const TextExample& example, long example_id,
                           Victim& victim, const SynonymLexicon& lexicon,
                           const AttackConfig& config);

struct AttackReport {
  std::string attack_name = "simplified-textfooler";
  double max_perturb_ratio = 0.0;
  int max_candidates_per_word = 0;
  std::uint64_t seed = 0;
  int n_runs = 0;
  long sample_size = 0;
  long originally_correct = 0;
  long flipped = 0;
  double clean_pct = 0.0;  // over the full test set
  double aua_pct = 0.0;    // over the sampled subset
  double suc_pct = 0.0;    // over originally-correct sampled examples
  std::vector<AttackRecord> records;
};

/// Aua% and Suc% from raw outcome counts:
///   Aua% = 100 * (clean_correct - flipped) / sample_size
///   Suc% = 100 * flipped / clean_correct   (0 when nothing was correct)
/// Originally-misclassified samples count as incorrect after attack and
/// are excluded from the success-rate denominator.
std::pair<double, double> attack_metrics(long sample_size, long clean_correct,
                                         long flipped);

/// Clean% over the whole test set, then attacks a seeded random sample
/// of sample_size examples. Per-example work may run on config.threads
/// threads; aggregation folds in example order, so the report is
/// bit-deterministic regardless of thread count.
AttackReport evaluate_attack(const std::vector<TextExample>& test,
                             const VictimFactory& factory,
                             const SynonymLexicon& lexicon,
                             const AttackConfig& config, long sample_size);

std::string report_to_json(const AttackReport& report);
void save_report_json(const std::string& path, const AttackReport& report);
/// CSV rows: id,orig_label,new_label,success,n_changed.
void save_report_csv(const std::string& path, const AttackReport& report);

}  // namespace roic
