#include "roic/attack.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "roic/errors.hpp"
#include "roic/rng.hpp"

namespace roic {

void AttackConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("attack config: " + msg); };
  if (!(max_perturb_ratio > 0.0 && max_perturb_ratio <= 1.0)) {
    fail("max_perturb_ratio must be in (0, 1]");
  }
  if (max_candidates_per_word < 1) fail("max_candidates_per_word must be positive");
  if (n_runs < 1) fail("n_runs must be positive");
  if (threads < 0) fail("threads must be >= 0");
}

std::vector<Vector> Victim::score_batch(
    const std::vector<std::vector<std::string>>& batch) {
  std::vector<Vector> out;
  out.reserve(batch.size());
  for (const std::vector<std::string>& tokens : batch) {
    out.push_back(score(tokens));
  }
  return out;
}

namespace {

class DiffusionVictim : public Victim {
 public:
  DiffusionVictim(const EstimatorParams& params, const NoiseSchedule& schedule,
                  const AdvisorModel* advisor, const Vocabulary& vocab,
                  std::uint64_t example_seed, int n_runs)
      : params_(params),
        schedule_(schedule),
        advisor_(advisor),
        vocab_(vocab),
        example_seed_(example_seed),
        n_runs_(n_runs) {}

  int num_classes() const override { return params_.num_classes(); }

  Vector score(const std::vector<std::string>& tokens) override {
    return score_batch({tokens}).front();
  }

  std::vector<Vector> score_batch(
      const std::vector<std::vector<std::string>>& batch) override {
    std::vector<std::vector<int>> inputs;
    std::vector<std::uint64_t> seeds;
    inputs.reserve(batch.size());
    seeds.reserve(batch.size());
    for (const std::vector<std::string>& tokens : batch) {
      inputs.push_back(vocab_.encode(tokens));
      seeds.push_back(derive_seed(example_seed_, query_counter_++));
    }
    return classify_scores_batch(inputs, params_, schedule_, advisor_, seeds,
                                 n_runs_);
  }

 private:
  const EstimatorParams& params_;
  const NoiseSchedule& schedule_;
  const AdvisorModel* advisor_;
  const Vocabulary& vocab_;
  std::uint64_t example_seed_;
  int n_runs_;
  std::uint64_t query_counter_ = 0;
};

class AdvisorVictim : public Victim {
 public:
  AdvisorVictim(const AdvisorModel& model, const Vocabulary& vocab)
      : model_(model), vocab_(vocab) {}

  int num_classes() const override { return model_.num_classes(); }

  Vector score(const std::vector<std::string>& tokens) override {
    return advisor_predict_soft(model_, vocab_.encode(tokens));
  }

 private:
  const AdvisorModel& model_;
  const Vocabulary& vocab_;
};

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string text;
  for (const std::string& tok : tokens) {
    if (!text.empty()) text += ' ';
    text += tok;
  }
  return text;
}

std::vector<std::string> attack_view(const std::string& text) {
  std::vector<std::string> tokens = tokenize(text);
  if (tokens.size() > static_cast<std::size_t>(kMaxSequenceLength)) {
    tokens.resize(kMaxSequenceLength);
  }
  return tokens;
}

/// Shared core of word_importance: also reports the original scores so
/// greedy_attack does not have to re-query the unperturbed input.
std::vector<WordImportance> importance_impl(
    const std::vector<std::string>& tokens, Victim& victim, int true_label,
    Vector* original_scores) {
  std::vector<std::vector<std::string>> batch;
  batch.reserve(tokens.size() + 1);
  batch.push_back(tokens);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    batch.push_back(tokens);
    batch.back()[i] = Vocabulary::kUnkToken;
  }
  const std::vector<Vector> scores = victim.score_batch(batch);
  const double base_margin = score_margin(scores[0], true_label);
  if (original_scores != nullptr) *original_scores = scores[0];

  std::vector<WordImportance> ranked;
  ranked.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    ranked.push_back({static_cast<int>(i),
                      base_margin - score_margin(scores[i + 1], true_label)});
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const WordImportance& a, const WordImportance& b) {
              if (a.importance != b.importance) {
                return a.importance > b.importance;
              }
              return a.position < b.position;
            });
  return ranked;
}

}  // namespace

DiffusionVictimFactory::DiffusionVictimFactory(const EstimatorParams& params,
                                               const NoiseSchedule& schedule,
                                               const AdvisorModel* advisor,
                                               const Vocabulary& vocab,
                                               std::uint64_t seed, int n_runs)
    : params_(params),
      schedule_(schedule),
      advisor_(advisor),
      vocab_(vocab),
      seed_(seed),
      n_runs_(n_runs) {}

std::unique_ptr<Victim> DiffusionVictimFactory::make(long example_id,
                                                     bool for_attack) const {
  return std::make_unique<DiffusionVictim>(
      params_, schedule_, advisor_, vocab_,
      derive_seed(seed_, static_cast<std::uint64_t>(example_id),
                  for_attack ? 1 : 0),
      for_attack ? n_runs_ : 1);
}

std::unique_ptr<Victim> AdvisorVictimFactory::make(long /*example_id*/,
                                                   bool /*for_attack*/) const {
  return std::make_unique<AdvisorVictim>(model_, vocab_);
}

std::vector<WordImportance> word_importance(
    const std::vector<std::string>& tokens, Victim& victim, int true_label) {
  if (tokens.empty()) {
    throw std::invalid_argument("word_importance: empty token sequence");
  }
  return importance_impl(tokens, victim, true_label, nullptr);
}

AttackRecord greedy_attack(const TextExample& example, long example_id,
                           Victim& victim, const SynonymLexicon& lexicon,
                           const AttackConfig& config) {
  config.validate();
  std::vector<std::string> current = attack_view(example.text);
  if (current.empty()) {
    throw std::invalid_argument("greedy_attack: example tokenizes to nothing");
  }

  AttackRecord record;
  record.example_id = example_id;
  record.original_text = join_tokens(current);
  record.true_label = example.label;
  record.originally_correct = true;

  const int budget = static_cast<int>(
      std::ceil(config.max_perturb_ratio * static_cast<double>(current.size())));

  Vector current_scores;
  const std::vector<WordImportance> ranked =
      importance_impl(current, victim, example.label, &current_scores);
  record.original_pred = argmax_lowest(current_scores);
  record.final_pred = record.original_pred;
  double current_margin = score_margin(current_scores, example.label);

  for (const WordImportance& entry : ranked) {
    if (record.words_changed >= budget) break;
    const std::vector<std::string>* candidates =
        lexicon.find(current[entry.position]);
    if (candidates == nullptr) continue;

    const int n_cands = std::min<int>(static_cast<int>(candidates->size()),
                                      config.max_candidates_per_word);
    std::vector<std::vector<std::string>> batch;
    batch.reserve(n_cands);
    for (int c = 0; c < n_cands; ++c) {
      batch.push_back(current);
      batch.back()[entry.position] = (*candidates)[c];
    }
    const std::vector<Vector> scores = victim.score_batch(batch);

    int best = -1;
    double best_margin = current_margin;
    for (int c = 0; c < n_cands; ++c) {
      const double margin = score_margin(scores[c], example.label);
      if (margin < best_margin) {
        best_margin = margin;
        best = c;
      }
    }
    if (best < 0) continue;

    current[entry.position] = (*candidates)[best];
    current_margin = best_margin;
    ++record.words_changed;
    record.final_pred = argmax_lowest(scores[best]);
    if (record.final_pred != example.label) {
      record.success = true;
      break;
    }
  }

  record.perturbed_text = join_tokens(current);
  return record;
}

std::pair<double, double> attack_metrics(long sample_size, long clean_correct,
                                         long flipped) {
  if (sample_size <= 0) throw ConfigError("attack metrics: empty sample");
  if (clean_correct < 0 || clean_correct > sample_size || flipped < 0 ||
      flipped > clean_correct) {
    throw std::invalid_argument("attack metrics: inconsistent counts");
  }
  const double aua = 100.0 * static_cast<double>(clean_correct - flipped) /
                     static_cast<double>(sample_size);
  const double suc = clean_correct == 0
                         ? 0.0
                         : 100.0 * static_cast<double>(flipped) /
                               static_cast<double>(clean_correct);
  return {aua, suc};
}

AttackReport evaluate_attack(const std::vector<TextExample>& test,
                             const VictimFactory& factory,
                             const SynonymLexicon& lexicon,
                             const AttackConfig& config, long sample_size) {
  config.validate();
  if (test.empty()) throw ConfigError("evaluate_attack: empty test set");
  if (sample_size < 1) throw ConfigError("evaluate_attack: empty sample");
  if (sample_size > static_cast<long>(test.size())) {
    throw ConfigError("evaluate_attack: sample_size exceeds test set");
  }

  AttackReport report;
  report.max_perturb_ratio = config.max_perturb_ratio;
  report.max_candidates_per_word = config.max_candidates_per_word;
  report.seed = config.seed;
  report.n_runs = config.n_runs;
  report.sample_size = sample_size;

  // Clean accuracy over the full test set with the plain scorer.
  long clean_correct_full = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::unique_ptr<Victim> victim =
        factory.make(static_cast<long>(i), /*for_attack=*/false);
    const Vector scores = victim->score(attack_view(test[i].text));
    if (argmax_lowest(scores) == test[i].label) ++clean_correct_full;
  }
  report.clean_pct = 100.0 * static_cast<double>(clean_correct_full) /
                     static_cast<double>(test.size());

  // Seeded sample, processed in ascending example order.
  std::vector<long> indices(test.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<long>(i);
  Rng sample_rng(derive_seed(config.seed, 0x5A3F1EULL));
  sample_rng.shuffle(indices);
  indices.resize(sample_size);
  std::sort(indices.begin(), indices.end());

  report.records.resize(sample_size);
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const long slot = next.fetch_add(1);
      if (slot >= sample_size || failed.load()) break;
      const long id = indices[slot];
      try {
        const TextExample& example = test[id];
        std::unique_ptr<Victim> victim = factory.make(id, /*for_attack=*/true);
        const std::vector<std::string> tokens = attack_view(example.text);
        const Vector scores = victim->score(tokens);
        const int pred = argmax_lowest(scores);
        if (pred != example.label) {
          AttackRecord& rec = report.records[slot];
          rec.example_id = id;
          rec.original_text = join_tokens(tokens);
          rec.perturbed_text = rec.original_text;
          rec.true_label = example.label;
          rec.original_pred = pred;
          rec.final_pred = pred;
          rec.originally_correct = false;
        } else {
          report.records[slot] =
              greedy_attack(example, id, *victim, lexicon, config);
        }
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        break;
      }
    }
  };

  int n_threads = config.threads > 0
                      ? config.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, sample_size));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (const AttackRecord& rec : report.records) {
    if (rec.originally_correct) ++report.originally_correct;
    if (rec.success) ++report.flipped;
  }
  const auto [aua, suc] =
      attack_metrics(sample_size, report.originally_correct, report.flipped);
  report.aua_pct = aua;
  report.suc_pct = suc;
  return report;
}

namespace {

using nlohmann::json;

json record_to_json(const AttackRecord& rec) {
  return json{{"example_id", rec.example_id},
              {"original_text", rec.original_text},
              {"perturbed_text", rec.perturbed_text},
              {"true_label", rec.true_label},
              {"original_pred", rec.original_pred},
              {"final_pred", rec.final_pred},
              {"words_changed", rec.words_changed},
              {"success", rec.success},
              {"originally_correct", rec.originally_correct}};
}

}  // namespace

std::string report_to_json(const AttackReport& report) {
  json doc;
  doc["attack"] = report.attack_name;
  doc["config"] = json{{"max_perturb_ratio", report.max_perturb_ratio},
                       {"max_candidates_per_word", report.max_candidates_per_word},
                       {"seed", report.seed},
                       {"n_runs", report.n_runs}};
  doc["sample_size"] = report.sample_size;
  doc["originally_correct"] = report.originally_correct;
  doc["flipped"] = report.flipped;
  doc["clean_pct"] = report.clean_pct;
  doc["aua_pct"] = report.aua_pct;
  doc["suc_pct"] = report.suc_pct;
  json records = json::array();
  for (const AttackRecord& rec : report.records) {
    records.push_back(record_to_json(rec));
  }
  doc["records"] = std::move(records);
  return doc.dump(2);
}

void save_report_json(const std::string& path, const AttackReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write attack report: " + path);
  out << report_to_json(report) << "\n";
  if (!out) throw IoError("failed writing attack report: " + path);
}

void save_report_csv(const std::string& path, const AttackReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write attack csv: " + path);
  out << "id,orig_label,new_label,success,n_changed\n";
  for (const AttackRecord& rec : report.records) {
    out << rec.example_id << ',' << rec.true_label << ',' << rec.final_pred
        << ',' << (rec.success ? 1 : 0) << ',' << rec.words_changed << "\n";
  }
  if (!out) throw IoError("failed writing attack csv: " + path);
}

}  // namespace roic
