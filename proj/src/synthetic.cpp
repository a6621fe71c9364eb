#include "roic/synthetic.hpp"

#include <unordered_set>

#include "roic/errors.hpp"
#include "roic/rng.hpp"

namespace roic {

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("synthetic spec: " + msg); };
  if (num_classes < 2) fail("num_classes must be >= 2");
  if (keywords_per_class < 1) fail("keywords_per_class must be positive");
  if (synonyms_per_keyword < 1) fail("synonyms_per_keyword must be positive");
  if (doc_length < 1) fail("doc_length must be positive");
  if (!(keyword_prob > 0.0 && keyword_prob <= 1.0)) {
    fail("keyword_prob must be in (0, 1]");
  }
  if (noise_vocab_size < 0) fail("noise_vocab_size must be >= 0");
  if (noise_vocab_size == 0 && keyword_prob < 1.0) {
    fail("noise_vocab_size must be positive when keyword_prob < 1");
  }
  if (!(rare_synonym_train_prob >= 0.0 && rare_synonym_train_prob < 1.0)) {
    fail("rare_synonym_train_prob must be in [0, 1)");
  }
  if (train_size < 1 || test_size < 1) fail("split sizes must be positive");
}

namespace {

std::string make_document(const SyntheticSpec& spec, int cls, bool is_train,
                          const std::vector<std::vector<std::string>>& keywords,
                          const std::vector<std::vector<std::vector<std::string>>>& synonyms,
                          const std::vector<std::string>& noise, Rng& rng) {
  std::string doc;
  for (int j = 0; j < spec.doc_length; ++j) {
    const std::string* token;
    if (rng.uniform() < spec.keyword_prob) {
      const int k = rng.uniform_int(spec.keywords_per_class);
      if (is_train && rng.uniform() < spec.rare_synonym_train_prob) {
        token = &synonyms[cls][k][rng.uniform_int(spec.synonyms_per_keyword)];
      } else {
        token = &keywords[cls][k];
      }
    } else {
      token = &noise[rng.uniform_int(spec.noise_vocab_size)];
    }
    if (!doc.empty()) doc += ' ';
    doc += *token;
  }
  return doc;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();

  SyntheticData data;
  data.class_keywords.resize(spec.num_classes);
  data.class_synonyms.resize(spec.num_classes);
  for (int c = 0; c < spec.num_classes; ++c) {
    data.label_names.push_back("class" + std::to_string(c));
    data.class_synonyms[c].resize(spec.keywords_per_class);
    for (int i = 0; i < spec.keywords_per_class; ++i) {
      const std::string keyword =
          "c" + std::to_string(c) + "w" + std::to_string(i);
      data.class_keywords[c].push_back(keyword);
      for (int s = 0; s < spec.synonyms_per_keyword; ++s) {
        data.class_synonyms[c][i].push_back(keyword + "s" + std::to_string(s));
      }
      data.lexicon.add(keyword, data.class_synonyms[c][i]);
    }
  }
  std::vector<std::string> noise;
  for (int i = 0; i < spec.noise_vocab_size; ++i) {
    noise.push_back("nz" + std::to_string(i));
  }

  Rng rng(derive_seed(spec.seed, 0x73796e7468ULL));  // "synth" stream
  std::unordered_set<std::string> seen;
  auto generate_split = [&](int count, bool is_train) {
    std::vector<TextExample> split;
    for (int i = 0; i < count; ++i) {
      const int cls = i % spec.num_classes;  // balanced within +-1
      TextExample ex;
      ex.label = cls;
      // Redraw on the (vanishingly rare) duplicate so splits stay disjoint.
      for (int attempt = 0;; ++attempt) {
        ex.text = make_document(spec, cls, is_train, data.class_keywords,
                                data.class_synonyms, noise, rng);
        if (seen.insert(ex.text).second) break;
        if (attempt >= 100) {
          throw ConfigError(
              "synthetic spec: document space too small to draw disjoint "
              "splits");
        }
      }
      split.push_back(std::move(ex));
    }
    return split;
  };
  data.train = generate_split(spec.train_size, /*is_train=*/true);
  data.test = generate_split(spec.test_size, /*is_train=*/false);
  return data;
}

}  // namespace roic
