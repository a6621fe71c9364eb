#include "roic/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "roic/errors.hpp"

namespace roic {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string word;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      word += static_cast<char>(std::tolower(c));
    } else if (!word.empty()) {
      tokens.push_back(word);
      word.clear();
    }
  }
  if (!word.empty()) tokens.push_back(word);
  return tokens;
}

std::string join_pair(const std::string& first, const std::string& second) {
  return first + " " + kPairSeparatorToken + " " + second;
}

Vocabulary::Vocabulary() {
  id_to_token_ = {kPadToken, kUnkToken};
  token_to_id_ = {{kPadToken, kPadId}, {kUnkToken, kUnkId}};
}

Vocabulary Vocabulary::build(const std::vector<TextExample>& corpus,
                             int min_freq) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::unordered_map<std::string, long> freq;
  for (const TextExample& ex : corpus) {
    for (const std::string& tok : tokenize(ex.text)) ++freq[tok];
  }
  // Sort by (frequency desc, token asc) for a deterministic id order.
  std::vector<std::pair<std::string, long>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary vocab;
  for (const auto& [token, count] : ranked) {
    if (count < min_freq) continue;
    vocab.token_to_id_.emplace(token, vocab.size());
    vocab.id_to_token_.push_back(token);
  }
  return vocab;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& id_to_token) {
  if (id_to_token.size() < 2 || id_to_token[0] != kPadToken ||
      id_to_token[1] != kUnkToken) {
    throw SchemaError("vocabulary table must start with <pad>, <unk>");
  }
  Vocabulary vocab;
  for (std::size_t id = 2; id < id_to_token.size(); ++id) {
    vocab.token_to_id_.emplace(id_to_token[id], static_cast<int>(id));
    vocab.id_to_token_.push_back(id_to_token[id]);
  }
  return vocab;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) {
    throw std::out_of_range("token id " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(size()));
  }
  return id_to_token_[id];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens,
                                    int max_len) const {
  std::vector<int> ids;
  ids.reserve(std::min<std::size_t>(tokens.size(), max_len));
  for (const std::string& tok : tokens) {
    if (static_cast<int>(ids.size()) >= max_len) break;
    ids.push_back(lookup(tok));
  }
  if (ids.empty()) ids.push_back(kUnkId);
  return ids;
}

std::vector<int> Vocabulary::encode_text(const std::string& text,
                                         int max_len) const {
  return encode(tokenize(text), max_len);
}

void encode_examples(const Vocabulary& vocab,
                     std::vector<TextExample>& examples) {
  for (TextExample& ex : examples) ex.tokens = vocab.encode_text(ex.text);
}

Vector one_hot(int label, int num_classes) {
  if (label < 0 || label >= num_classes) {
    throw std::out_of_range("label " + std::to_string(label) +
                            " outside [0, " + std::to_string(num_classes) +
                            ")");
  }
  Vector v = Vector::Zero(num_classes);
  v[label] = 1.0;
  return v;
}

namespace {

int resolve_label(const nlohmann::json& value,
                  const std::vector<std::string>& label_names, long line_no) {
  const std::string where = "line " + std::to_string(line_no);
  if (value.is_string()) {
    const std::string name = value.get<std::string>();
    auto it = std::find(label_names.begin(), label_names.end(), name);
    if (it == label_names.end()) {
      throw ParseError(where + ": unknown label \"" + name + "\"");
    }
    return static_cast<int>(it - label_names.begin());
  }
  if (value.is_number_integer()) {
    const long idx = value.get<long>();
    if (idx < 0 || idx >= static_cast<long>(label_names.size())) {
      throw ParseError(where + ": unknown label index " + std::to_string(idx));
    }
    return static_cast<int>(idx);
  }
  throw ParseError(where + ": \"label\" must be a string or integer");
}

}  // namespace

std::vector<TextExample> load_jsonl_dataset(
    const std::string& path, const std::vector<std::string>& label_names) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);

  std::vector<TextExample> examples;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": invalid JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("text") ||
        !obj["text"].is_string()) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": missing string field \"text\"");
    }
    if (!obj.contains("label")) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": missing field \"label\"");
    }
    TextExample ex;
    ex.text = obj["text"].get<std::string>();
    ex.label = resolve_label(obj["label"], label_names, line_no);
    examples.push_back(std::move(ex));
  }
  return examples;
}

void save_jsonl_dataset(const std::string& path,
                        const std::vector<TextExample>& examples,
                        const std::vector<std::string>& label_names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset: " + path);
  for (const TextExample& ex : examples) {
    nlohmann::json obj;
    obj["text"] = ex.text;
    obj["label"] = label_names.at(ex.label);
    out << obj.dump() << "\n";
  }
  if (!out) throw IoError("failed writing dataset: " + path);
}

void SynonymLexicon::add(const std::string& word,
                         const std::vector<std::string>& candidates) {
  std::vector<std::string>& list = entries_[word];
  for (const std::string& cand : candidates) {
    if (cand == word) continue;
    if (std::find(list.begin(), list.end(), cand) == list.end()) {
      list.push_back(cand);
    }
  }
  if (list.empty()) entries_.erase(word);
}

const std::vector<std::string>* SynonymLexicon::find(
    const std::string& word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

SynonymLexicon SynonymLexicon::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon: " + path);
  SynonymLexicon lex;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected word<TAB>candidates");
    }
    const std::string word = line.substr(0, tab);
    std::vector<std::string> candidates;
    std::stringstream rest(line.substr(tab + 1));
    std::string cand;
    while (std::getline(rest, cand, ',')) {
      if (!cand.empty()) candidates.push_back(cand);
    }
    lex.add(word, candidates);
  }
  return lex;
}

void SynonymLexicon::save_tsv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write lexicon: " + path);
  // Sorted by word so the file is deterministic.
  std::map<std::string, const std::vector<std::string>*> sorted;
  for (const auto& [word, list] : entries_) sorted.emplace(word, &list);
  for (const auto& [word, list] : sorted) {
    out << word << '\t';
    for (std::size_t i = 0; i < list->size(); ++i) {
      if (i > 0) out << ',';
      out << (*list)[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing lexicon: " + path);
}

}  // namespace roic
