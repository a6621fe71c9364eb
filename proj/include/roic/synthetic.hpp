#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roic/text.hpp"

namespace roic {

/// Parameters of the synthetic keyword corpus. Each class owns a
/// disjoint pool of common keywords; every keyword is paired with rare
/// synonyms of the same class that appear in training documents only
/// with probability rare_synonym_train_prob. Those synonyms are the
/// attack surface: label-preserving substitutes the models have barely
/// seen during training.
struct SyntheticSpec {
  int num_classes = 4;
  int keywords_per_class = 20;
  int synonyms_per_keyword = 3;
  int doc_length = 30;
  double keyword_prob = 0.4;
  int noise_vocab_size = 200;
  double rare_synonym_train_prob = 0.02;
  int train_size = 2000;
  int test_size = 500;
  std::uint64_t seed = 7;

  /// Throws ConfigError when any field is out of range.
  void validate() const;
};

struct SyntheticData {
  std::vector<TextExample> train;
  std::vector<TextExample> test;
  SynonymLexicon lexicon;
  std::vector<std::string> label_names;
  // Generator metadata, e.g. for oracle classifiers in tests:
  // class_keywords[c][i] is keyword i of class c, class_synonyms[c][i]
  // its rare substitutes.
  std::vector<std::vector<std::string>> class_keywords;
  std::vector<std::vector<std::vector<std::string>>> class_synonyms;
};

/// Pure function of the spec (including its seed): equal specs produce
/// byte-identical datasets. Train and test documents are disjoint and
/// class-balanced within one example.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace roic
