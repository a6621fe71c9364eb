#include <doctest.h>

#include <set>
#include <unordered_map>
#include <unordered_set>

#include "roic/errors.hpp"
#include "roic/synthetic.hpp"

using namespace roic;

namespace {

std::string dataset_fingerprint(const SyntheticData& data) {
  std::string fp;
  for (const TextExample& ex : data.train) {
    fp += std::to_string(ex.label) + "|" + ex.text + "\n";
  }
  fp += "--\n";
  for (const TextExample& ex : data.test) {
    fp += std::to_string(ex.label) + "|" + ex.text + "\n";
  }
  return fp;
}

/// Bag-of-words oracle: count per-class keyword (and synonym)
/// occurrences, argmax wins.
int keyword_count_label(const SyntheticData& data, const std::string& text) {
  std::unordered_map<std::string, int> token_class;
  for (std::size_t c = 0; c < data.class_keywords.size(); ++c) {
    for (const std::string& kw : data.class_keywords[c]) {
      token_class[kw] = static_cast<int>(c);
    }
    for (const auto& list : data.class_synonyms[c]) {
      for (const std::string& syn : list) token_class[syn] = static_cast<int>(c);
    }
  }
  std::vector<int> counts(data.class_keywords.size(), 0);
  for (const std::string& tok : tokenize(text)) {
    auto it = token_class.find(tok);
    if (it != token_class.end()) ++counts[it->second];
  }
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace

TEST_CASE("same spec and seed give byte-identical datasets") {
  SyntheticSpec spec;
  spec.train_size = 60;
  spec.test_size = 20;
  const SyntheticData a = generate_synthetic(spec);
  const SyntheticData b = generate_synthetic(spec);
  CHECK(dataset_fingerprint(a) == dataset_fingerprint(b));

  spec.seed += 1;
  const SyntheticData c = generate_synthetic(spec);
  CHECK(dataset_fingerprint(a) != dataset_fingerprint(c));
}

TEST_CASE("keyword_prob 1 with empty noise pool keeps every token in class") {
  SyntheticSpec spec;
  spec.keyword_prob = 1.0;
  spec.noise_vocab_size = 0;
  spec.train_size = 40;
  spec.test_size = 12;
  const SyntheticData data = generate_synthetic(spec);

  auto in_class_pool = [&](const TextExample& ex, const std::string& tok) {
    const auto& keywords = data.class_keywords[ex.label];
    if (std::find(keywords.begin(), keywords.end(), tok) != keywords.end()) {
      return true;
    }
    for (const auto& list : data.class_synonyms[ex.label]) {
      if (std::find(list.begin(), list.end(), tok) != list.end()) return true;
    }
    return false;
  };
  for (const auto* split : {&data.train, &data.test}) {
    for (const TextExample& ex : *split) {
      for (const std::string& tok : tokenize(ex.text)) {
        CHECK(in_class_pool(ex, tok));
      }
    }
  }
}

TEST_CASE("default corpus is nearly perfectly separable by keyword counts") {
  const SyntheticSpec spec;  // defaults: C=4, 2000 train / 500 test
  const SyntheticData data = generate_synthetic(spec);
  REQUIRE(data.train.size() == 2000);
  REQUIRE(data.test.size() == 500);

  long correct = 0;
  for (const TextExample& ex : data.test) {
    if (keyword_count_label(data, ex.text) == ex.label) ++correct;
  }
  const double accuracy =
      static_cast<double>(correct) / static_cast<double>(data.test.size());
  CHECK(accuracy >= 0.99);
}

TEST_CASE("splits are disjoint and class-balanced within one example") {
  SyntheticSpec spec;
  spec.train_size = 202;
  spec.test_size = 50;
  const SyntheticData data = generate_synthetic(spec);

  std::unordered_set<std::string> train_docs;
  for (const TextExample& ex : data.train) train_docs.insert(ex.text);
  CHECK(train_docs.size() == data.train.size());
  for (const TextExample& ex : data.test) {
    CHECK(train_docs.count(ex.text) == 0);
  }

  for (const auto* split : {&data.train, &data.test}) {
    std::vector<long> counts(spec.num_classes, 0);
    for (const TextExample& ex : *split) ++counts[ex.label];
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    CHECK(*hi - *lo <= 1);
  }
}

TEST_CASE("lexicon substitutes stay within the keyword's class") {
  const SyntheticSpec spec;
  const SyntheticData data = generate_synthetic(spec);
  CHECK(data.lexicon.size() ==
        static_cast<std::size_t>(spec.num_classes * spec.keywords_per_class));
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int i = 0; i < spec.keywords_per_class; ++i) {
      const std::string& kw = data.class_keywords[c][i];
      const auto* subs = data.lexicon.find(kw);
      REQUIRE(subs != nullptr);
      CHECK(subs->size() ==
            static_cast<std::size_t>(spec.synonyms_per_keyword));
      for (const std::string& syn : *subs) {
        CHECK(syn != kw);
        const auto& expected = data.class_synonyms[c][i];
        CHECK(std::find(expected.begin(), expected.end(), syn) !=
              expected.end());
      }
    }
  }
}

TEST_CASE("rare synonyms appear in training but not in test documents") {
  SyntheticSpec spec;
  spec.rare_synonym_train_prob = 0.05;
  const SyntheticData data = generate_synthetic(spec);

  std::unordered_set<std::string> synonyms;
  for (const auto& per_class : data.class_synonyms) {
    for (const auto& list : per_class) {
      synonyms.insert(list.begin(), list.end());
    }
  }
  long train_hits = 0;
  for (const TextExample& ex : data.train) {
    for (const std::string& tok : tokenize(ex.text)) {
      if (synonyms.count(tok)) ++train_hits;
    }
  }
  CHECK(train_hits > 0);
  for (const TextExample& ex : data.test) {
    for (const std::string& tok : tokenize(ex.text)) {
      CHECK(synonyms.count(tok) == 0);
    }
  }
}

TEST_CASE("invalid specs are rejected") {
  SyntheticSpec spec;
  spec.num_classes = 1;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.keyword_prob = 0.0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.keyword_prob = 0.5;
  spec.noise_vocab_size = 0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.rare_synonym_train_prob = 1.0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.train_size = 0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
}
