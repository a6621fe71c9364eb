// Command-line front end: dataset synthesis, training, evaluation,
// adversarial attack and reverse-trajectory tracing.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "roic/attack.hpp"
#include "roic/checkpoint.hpp"
#include "roic/errors.hpp"
#include "roic/kvconfig.hpp"
#include "roic/logging.hpp"
#include "roic/sampler.hpp"
#include "roic/synthetic.hpp"
#include "roic/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct SeedOverride {
  std::optional<std::uint64_t> value;
};

roic::SyntheticSpec load_synth_spec(const std::string& path,
                                    const SeedOverride& seed) {
  roic::KvConfig kv = roic::KvConfig::parse_file(path);
  roic::SyntheticSpec spec;
  spec.num_classes = kv.get_int("classes", spec.num_classes);
  spec.keywords_per_class =
      kv.get_int("keywords_per_class", spec.keywords_per_class);
  spec.synonyms_per_keyword =
      kv.get_int("synonyms_per_keyword", spec.synonyms_per_keyword);
  spec.doc_length = kv.get_int("doc_length", spec.doc_length);
  spec.keyword_prob = kv.get_double("keyword_prob", spec.keyword_prob);
  spec.noise_vocab_size = kv.get_int("noise_vocab_size", spec.noise_vocab_size);
  spec.rare_synonym_train_prob =
      kv.get_double("rare_synonym_train_prob", spec.rare_synonym_train_prob);
  spec.train_size = kv.get_int("train_size", spec.train_size);
  spec.test_size = kv.get_int("test_size", spec.test_size);
  spec.seed = kv.get_u64("seed", spec.seed);
  kv.finish();
  if (seed.value) spec.seed = *seed.value;
  spec.validate();
  return spec;
}

roic::TrainConfig load_train_config(const std::string& path,
                                    const SeedOverride& seed,
                                    int* vocab_min_freq) {
  roic::KvConfig kv = roic::KvConfig::parse_file(path);
  roic::TrainConfig config;
  config.epochs = kv.get_int("epochs", config.epochs);
  config.batch_size = kv.get_int("batch_size", config.batch_size);
  config.lr0 = kv.get_double("lr0", config.lr0);
  config.weight_decay = kv.get_double("weight_decay", config.weight_decay);
  config.T = kv.get_int("T", config.T);
  config.beta_start = kv.get_double("beta_start", config.beta_start);
  config.beta_end = kv.get_double("beta_end", config.beta_end);
  config.use_advisor = kv.get_bool("use_advisor", config.use_advisor);
  config.seed = kv.get_u64("seed", config.seed);
  config.eval_every = kv.get_int("eval_every", config.eval_every);
  config.advisor_epochs = kv.get_int("advisor_epochs", config.advisor_epochs);
  config.advisor_lr0 = kv.get_double("advisor_lr0", config.advisor_lr0);
  config.embed_dim = kv.get_int("embed_dim", config.embed_dim);
  config.hidden_dim = kv.get_int("hidden_dim", config.hidden_dim);
  config.feature_dim = kv.get_int("feature_dim", config.feature_dim);
  *vocab_min_freq = kv.get_int("vocab_min_freq", 1);
  kv.finish();
  if (seed.value) config.seed = *seed.value;
  config.validate();
  return config;
}

std::vector<std::string> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw roic::IoError("cannot open labels file: " + path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) labels.push_back(line);
  }
  if (labels.size() < 2) {
    throw roic::ParseError("labels file needs at least 2 labels: " + path);
  }
  return labels;
}

int run_synth(const std::string& spec_path, const std::string& out_dir,
              const SeedOverride& seed) {
  const roic::SyntheticSpec spec = load_synth_spec(spec_path, seed);
  const fs::path dir(out_dir);
  std::error_code ec;
  if (!fs::exists(dir)) {
    if (!fs::create_directory(dir, ec) || ec) {
      throw roic::IoError("cannot create output directory " + out_dir +
                          (ec ? ": " + ec.message() : ""));
    }
  }

  const roic::SyntheticData data = roic::generate_synthetic(spec);
  roic::save_jsonl_dataset((dir / "train.jsonl").string(), data.train,
                           data.label_names);
  roic::save_jsonl_dataset((dir / "test.jsonl").string(), data.test,
                           data.label_names);
  data.lexicon.save_tsv((dir / "lexicon.tsv").string());
  {
    std::ofstream labels((dir / "labels.txt").string(), std::ios::binary);
    if (!labels) throw roic::IoError("cannot write labels.txt");
    for (const std::string& name : data.label_names) labels << name << "\n";
  }
  std::printf("wrote %zu train / %zu test examples, %zu lexicon entries to %s\n",
              data.train.size(), data.test.size(), data.lexicon.size(),
              out_dir.c_str());
  return 0;
}

int run_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_path, bool no_advisor,
              std::string curve_path, const SeedOverride& seed) {
  int vocab_min_freq = 1;
  roic::TrainConfig config =
      load_train_config(config_path, seed, &vocab_min_freq);
  if (no_advisor) config.use_advisor = false;

  const fs::path dir(data_dir);
  const std::vector<std::string> labels =
      load_labels((dir / "labels.txt").string());
  std::vector<roic::TextExample> train_set =
      roic::load_jsonl_dataset((dir / "train.jsonl").string(), labels);
  std::vector<roic::TextExample> test_set =
      roic::load_jsonl_dataset((dir / "test.jsonl").string(), labels);

  roic::log_info("training on " + std::to_string(train_set.size()) +
                 " examples (" + (config.use_advisor ? "with" : "without") +
                 " advisor)");
  roic::PipelineResult result = roic::train_pipeline(
      config, std::move(train_set), labels, vocab_min_freq, &test_set);

  roic::save_checkpoint(out_path, result.checkpoint);
  if (curve_path.empty()) curve_path = out_path + ".curve.csv";
  roic::save_loss_curve(curve_path, result.loss_curve);

  encode_examples(result.vocabulary, test_set);
  const roic::NoiseSchedule schedule = config.schedule();
  const roic::AdvisorModel* advisor = result.checkpoint.advisor
                                          ? &*result.checkpoint.advisor
                                          : nullptr;
  const double accuracy = roic::clean_accuracy(
      test_set, result.checkpoint.estimator, schedule, advisor,
      roic::derive_seed(config.seed, 0xE7A1ULL), /*n_runs=*/1);
  std::printf("clean_accuracy = %.4f\n", accuracy);
  return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& data_path,
             int n_runs, const SeedOverride& seed) {
  const roic::Checkpoint ckpt = roic::load_checkpoint(ckpt_path);
  const roic::Vocabulary vocab = roic::Vocabulary::from_tokens(ckpt.vocab);
  std::vector<roic::TextExample> examples =
      roic::load_jsonl_dataset(data_path, ckpt.labels);
  encode_examples(vocab, examples);

  const roic::NoiseSchedule schedule = ckpt.config.schedule();
  const roic::AdvisorModel* advisor =
      ckpt.advisor ? &*ckpt.advisor : nullptr;
  const double accuracy = roic::clean_accuracy(
      examples, ckpt.estimator, schedule, advisor,
      seed.value ? *seed.value : roic::derive_seed(ckpt.config.seed, 0xE7A1ULL),
      n_runs);
  std::printf("Clean%%: %.2f\n", 100.0 * accuracy);
  return 0;
}

int run_attack(const std::string& ckpt_path, const std::string& data_path,
               const std::string& lexicon_path, long sample_size,
               double budget, const std::string& victim_kind,
               const std::string& out_path, const std::string& csv_path,
               int n_runs, int threads, const SeedOverride& seed) {
  const roic::Checkpoint ckpt = roic::load_checkpoint(ckpt_path);
  const roic::Vocabulary vocab = roic::Vocabulary::from_tokens(ckpt.vocab);
  std::vector<roic::TextExample> test =
      roic::load_jsonl_dataset(data_path, ckpt.labels);
  encode_examples(vocab, test);
  const roic::SynonymLexicon lexicon = roic::SynonymLexicon::load_tsv(lexicon_path);

  roic::AttackConfig config;
  config.max_perturb_ratio = budget;
  config.seed = seed.value ? *seed.value : 0;
  config.n_runs = n_runs;
  config.threads = threads;
  config.validate();

  const roic::NoiseSchedule schedule = ckpt.config.schedule();
  const roic::AdvisorModel* advisor = ckpt.advisor ? &*ckpt.advisor : nullptr;

  std::unique_ptr<roic::VictimFactory> factory;
  if (victim_kind == "diffusion") {
    factory = std::make_unique<roic::DiffusionVictimFactory>(
        ckpt.estimator, schedule, advisor, vocab, config.seed, config.n_runs);
  } else if (victim_kind == "advisor") {
    if (advisor == nullptr) {
      throw roic::ConfigError(
          "checkpoint has no advisor parameters; cannot attack the advisor");
    }
    factory = std::make_unique<roic::AdvisorVictimFactory>(*advisor, vocab);
  } else {
    throw roic::ConfigError("unknown victim \"" + victim_kind +
                            "\" (expected diffusion or advisor)");
  }

  const roic::AttackReport report =
      roic::evaluate_attack(test, *factory, lexicon, config, sample_size);
  roic::save_report_json(out_path, report);
  if (!csv_path.empty()) roic::save_report_csv(csv_path, report);
  std::printf("Clean%%: %.2f  Aua%%: %.2f  Suc%%: %.2f\n", report.clean_pct,
              report.aua_pct, report.suc_pct);
  return 0;
}

int run_trace(const std::string& ckpt_path, const std::string& text,
              const std::string& out_path, const SeedOverride& seed) {
  const roic::Checkpoint ckpt = roic::load_checkpoint(ckpt_path);
  const roic::Vocabulary vocab = roic::Vocabulary::from_tokens(ckpt.vocab);
  const std::vector<int> tokens = vocab.encode_text(text);

  const roic::NoiseSchedule schedule = ckpt.config.schedule();
  roic::ClassifyOptions options;
  options.seed = seed.value ? *seed.value : 0;
  options.n_runs = 1;
  options.record_trajectory = true;
  const roic::ClassifyResult result =
      roic::classify(tokens, ckpt.estimator, schedule,
                     ckpt.advisor ? &*ckpt.advisor : nullptr, options);
  roic::write_trajectory_csv(out_path, result.trajectory);

  std::printf("label: %s\n", ckpt.labels.at(result.label).c_str());
  std::printf("scores:");
  for (roic::Index i = 0; i < result.scores.size(); ++i) {
    std::printf(" %.17g", result.scores[i]);
  }
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-based robust text classifier and attack harness"};
  app.require_subcommand(1);
  app.fallthrough();

  SeedOverride seed;
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t v) { seed.value = v; },
      "Override every configured random seed");

  std::string spec_path, out_dir;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--spec", spec_path, "Spec file (key = value)")->required();
  synth->add_option("--out-dir", out_dir, "Output directory")->required();

  std::string config_path, data_dir, ckpt_out, curve_path;
  bool no_advisor = false;
  CLI::App* train = app.add_subcommand("train", "Train advisor and denoiser");
  train->add_option("--config", config_path, "Train config (key = value)")
      ->required();
  train->add_option("--data-dir", data_dir, "Directory with train/test/labels")
      ->required();
  train->add_option("--out", ckpt_out, "Checkpoint output path")->required();
  train->add_option("--curve", curve_path, "Loss-curve CSV path");
  train->add_flag("--no-advisor", no_advisor, "Train without the advisor");

  std::string ckpt_path, data_path;
  int eval_runs = 1;
  CLI::App* eval = app.add_subcommand("eval", "Clean accuracy of a checkpoint");
  eval->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();
  eval->add_option("--data", data_path, "JSONL dataset")->required();
  eval->add_option("--n-runs", eval_runs, "Reverse chains per prediction")
      ->check(CLI::PositiveNumber);

  std::string lexicon_path, report_path = "attack_report.json", csv_path;
  std::string victim_kind = "diffusion";
  long sample_size = 500;
  double budget = 0.2;
  int attack_runs = 4;
  int threads = 0;
  CLI::App* attack = app.add_subcommand("attack", "Greedy substitution attack");
  attack->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();
  attack->add_option("--data", data_path, "JSONL dataset")->required();
  attack->add_option("--lexicon", lexicon_path, "Synonym lexicon TSV")
      ->required();
  attack->add_option("--sample-size", sample_size, "Examples to attack");
  attack->add_option("--budget", budget, "Max fraction of words replaced");
  attack->add_option("--victim", victim_kind, "diffusion or advisor");
  attack->add_option("--out", report_path, "Attack report JSON path");
  attack->add_option("--csv", csv_path, "Optional per-example CSV path");
  attack->add_option("--n-runs", attack_runs, "Victim chains per query");
  attack->add_option("--threads", threads, "Worker threads (0 = auto)");

  std::string trace_text, trace_out;
  CLI::App* trace = app.add_subcommand("trace", "Record a reverse trajectory");
  trace->add_option("--ckpt", ckpt_path, "Checkpoint path")->required();
  trace->add_option("--text", trace_text, "Input text")->required();
  trace->add_option("--out", trace_out, "Trajectory CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return run_synth(spec_path, out_dir, seed);
    if (train->parsed()) {
      return run_train(config_path, data_dir, ckpt_out, no_advisor, curve_path,
                       seed);
    }
    if (eval->parsed()) return run_eval(ckpt_path, data_path, eval_runs, seed);
    if (attack->parsed()) {
      return run_attack(ckpt_path, data_path, lexicon_path, sample_size,
                        budget, victim_kind, report_path, csv_path,
                        attack_runs, threads, seed);
    }
    if (trace->parsed()) return run_trace(ckpt_path, trace_text, trace_out, seed);
  } catch (const roic::ConfigError& e) {
    roic::log_error(e.what());
    return 2;
  } catch (const roic::IoError& e) {
    roic::log_error(e.what());
    return 3;
  } catch (const roic::NumericError& e) {
    roic::log_error(e.what());
    return 4;
  } catch (const roic::SchemaError& e) {
    roic::log_error(e.what());
    return 5;
  } catch (const std::invalid_argument& e) {
    roic::log_error(e.what());
    return 2;
  } catch (const std::out_of_range& e) {
    roic::log_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    roic::log_error(e.what());
    return 1;
  }
  return 0;
}
