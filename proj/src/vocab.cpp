#include "styleobf/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace styleobf {

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<bos>");
  add("<eos>");
  add("<unk>");
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) > 0;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw DataError("token id out of range");
  return tokens_[static_cast<size_t>(id)];
}

uint64_t Vocabulary::hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& t : tokens_) {
    h = mix64(h, fnv1a64(t));
  }
  return h;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file: " + path);
  for (const auto& t : tokens_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read vocabulary file: " + path);
  Vocabulary v;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (row < kNumSpecial) {
      if (line != v.tokens_[static_cast<size_t>(row)])
        throw DataError("vocabulary file missing special tokens: " + path);
    } else {
      if (line.empty()) throw DataError("empty token in vocabulary file: " + path);
      v.add(line);
    }
    ++row;
  }
  if (row < kNumSpecial) throw DataError("vocabulary file truncated: " + path);
  return v;
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

Sentence tokenize(const Vocabulary& vocab, const std::string& line) {
  Sentence s;
  for (const auto& tok : split_whitespace(line)) s.ids.push_back(vocab.id(tok));
  if (s.ids.empty()) throw DataError("tokenize: empty sentence");
  return s;
}

std::string detokenize(const Vocabulary& vocab, const Sentence& s) {
  std::string out;
  for (size_t i = 0; i < s.ids.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token(s.ids[i]);
  }
  return out;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpora, int min_count) {
  if (min_count < 1) throw ConfigError("build_vocabulary: min_count must be >= 1");
  std::map<std::string, long> counts;
  for (const auto& corpus : corpora)
    for (const auto& line : corpus)
      for (const auto& tok : split_whitespace(line)) ++counts[tok];
  // order: frequency desc, then lexicographic, for a reproducible id layout
  std::vector<std::pair<std::string, long>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [tok, cnt] : items)
    if (cnt >= min_count) v.add(tok);
  return v;
}

}  // namespace styleobf
