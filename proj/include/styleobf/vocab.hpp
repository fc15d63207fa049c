#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "styleobf/common.hpp"

namespace styleobf {

// Token id sequence for one sentence. Stored sentences hold content tokens
// only; BOS/EOS are added by the models where needed.
struct Sentence {
  std::vector<int> ids;
  int length() const { return static_cast<int>(ids.size()); }
  bool operator==(const Sentence& o) const { return ids == o.ids; }
};

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecial = 4;

  Vocabulary();

  int add(const std::string& token);  // idempotent, returns id
  int size() const { return static_cast<int>(tokens_.size()); }
  // Lookup with UNK fallback for unknown surface forms.
  int id(const std::string& token) const;
  bool contains(const std::string& token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  static bool is_special(int id) { return id >= 0 && id < kNumSpecial; }

  // Stable content hash over the ordered token list; used to pair
  // checkpoints with the vocabulary they were trained on.
  uint64_t hash() const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

std::vector<std::string> split_whitespace(const std::string& line);

// Whitespace tokenization into ids; unknown tokens map to UNK.
Sentence tokenize(const Vocabulary& vocab, const std::string& line);
std::string detokenize(const Vocabulary& vocab, const Sentence& s);

// Frequency cutoff vocabulary over one or more raw-line corpora.
// Tokens seen fewer than min_count times are dropped (mapped to UNK later).
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& corpora, int min_count);

}  // namespace styleobf
