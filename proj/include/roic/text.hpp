#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "roic/linalg.hpp"

namespace roic {

/// Right-truncation length applied when encoding token sequences.
inline constexpr int kMaxSequenceLength = 128;

/// Token used to join the two halves of a sentence-pair input. A plain
/// reserved token, not a special id; it earns a vocabulary slot like any
/// other token when present in the corpus.
inline constexpr const char* kPairSeparatorToken = "xxsep";

struct TextExample {
  std::string text;
  std::vector<int> tokens;  // filled by encode_examples
  int label = -1;
};

/// Lowercases and splits on any non-alphanumeric character; punctuation
/// is dropped. Empty input yields an empty list.
std::vector<std::string> tokenize(const std::string& text);

/// Joins a sentence pair into a single attackable text.
std::string join_pair(const std::string& first, const std::string& second);

class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnkId = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary();

  /// Frequency-ordered vocabulary over the tokenized corpus. Tokens with
  /// frequency >= min_freq get ids from 2 in descending-frequency order,
  /// ties broken lexicographically. Throws on an empty corpus.
  static Vocabulary build(const std::vector<TextExample>& corpus,
                          int min_freq);

  /// Rebuilds from a serialized id -> token table (checkpoint load).
  static Vocabulary from_tokens(const std::vector<std::string>& id_to_token);

  int size() const { return static_cast<int>(id_to_token_.size()); }

  /// Token id, or kUnkId for out-of-vocabulary tokens.
  int lookup(const std::string& token) const;

  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// Encodes token strings to ids, truncating from the right at max_len.
  /// An empty sequence maps to a single UNK so encodings are never empty.
  std::vector<int> encode(std::span<const std::string> tokens,
                          int max_len = kMaxSequenceLength) const;

  /// tokenize + encode in one step.
  std::vector<int> encode_text(const std::string& text,
                               int max_len = kMaxSequenceLength) const;

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

/// Fills `tokens` for every example via vocab.encode_text.
void encode_examples(const Vocabulary& vocab, std::vector<TextExample>& examples);

/// Unit basis vector e_label in R^C. Throws std::out_of_range if the
/// label is outside [0, C).
Vector one_hot(int label, int num_classes);

/// Loads a JSON-lines dataset: one object per line with a string "text"
/// and a "label" that is either a name from label_names or an integer
/// index. Errors carry the 1-based line number. Tokens are left empty;
/// call encode_examples once a vocabulary exists.
std::vector<TextExample> load_jsonl_dataset(
    const std::string& path, const std::vector<std::string>& label_names);

/// Writes the matching JSON-lines format with string label names.
void save_jsonl_dataset(const std::string& path,
                        const std::vector<TextExample>& examples,
                        const std::vector<std::string>& label_names);

/// Word -> ordered substitute candidates. No word maps to itself and
/// candidate lists are duplicate-free; add() enforces both.
class SynonymLexicon {
 public:
  void add(const std::string& word, const std::vector<std::string>& candidates);

  /// Candidates for a word, or nullptr when the word has no entry.
  const std::vector<std::string>* find(const std::string& word) const;

  std::size_t size() const { return entries_.size(); }

  /// One entry per line: word<TAB>syn1,syn2,...
  static SynonymLexicon load_tsv(const std::string& path);
  void save_tsv(const std::string& path) const;

 private:
  std::unordered_map<std::string, std::vector<std::string>> entries_;
};

}  // namespace roic
