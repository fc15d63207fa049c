#pragma once

#include <string>
#include <vector>

#include "styleobf/dataset.hpp"

namespace styleobf {

// Domain marker scheme: word w in domain j is rewritten as e.g. "00w00" for
// domain 0, "11w11" for domain 1, and so on.
struct CorruptionSpec {
  std::vector<std::vector<std::string>> words;  // [domain] -> base words, frequency desc

  int num_domains() const { return static_cast<int>(words.size()); }
  std::string marker(int domain, const std::string& word) const;
  bool is_marker(const std::string& token, int* domain = nullptr,
                 std::string* base = nullptr) const;

  void save(const std::string& path) const;
  static CorruptionSpec load(const std::string& path);
};

struct SyntheticConfig {
  long train_size = 30000;
  long test_size = 3000;
  int num_domains = 3;
  int words_per_domain = 5;
  int top_k = 20;
  int min_count = 1;
  uint64_t seed = 1;

  void validate() const;
};

// Synthetic review-style base corpus: weighted sentence templates with
// content-word slots. The template weights are balanced so the global
// frequency ranking is stable for any seed at corpus sizes >= ~10k.
std::vector<std::string> generate_review_corpus(long n, Rng& rng);

// Most frequent distinct tokens across lines (count desc, tie lexicographic).
std::vector<std::string> top_frequency_words(const std::vector<std::string>& lines, int k);

struct SyntheticBuild {
  MultiDomainDataset dataset;      // corrupted text, per-domain splits
  CorruptionSpec corruption;
  // Uncorrupted originals, token-aligned with dataset.train / dataset.test.
  std::vector<std::vector<Sentence>> train_refs;
  std::vector<std::vector<Sentence>> test_refs;
};

// Shuffle the base corpus, split into num_domains groups, choose
// words_per_domain * num_domains words at random from the top_k most
// frequent, allocate them to domains in frequency-descending blocks, and
// replace each domain's words with its markers inside that domain only.
SyntheticBuild build_synthetic_domains(const std::vector<std::string>& base_lines,
                                       const SyntheticConfig& cfg);

// Base corpus generation plus domain construction, fully determined by cfg.
SyntheticBuild make_synthetic_build(const SyntheticConfig& cfg);

void save_synthetic_build(const SyntheticBuild& build, const std::string& dir);
// Loads dataset + corruption spec + reference splits written by
// save_synthetic_build (reference files are optional in plain datasets).
SyntheticBuild load_synthetic_build(const std::string& dir);

struct CorruptionStats {
  double corrected = 0;   // marker replaced by its base word
  double remaining = 0;   // marker kept verbatim
  double removed = 0;     // marker vanished without the base word appearing
  double spread = 0;      // base words outside their domain turned into markers
};

// Marker bookkeeping between domain inputs and system outputs, averaged over
// domains, in percent. Alignment is greedy: each original marker occurrence
// consumes the first unconsumed matching token in the output sentence.
CorruptionStats corruption_stats(const std::vector<std::vector<Sentence>>& originals,
                                 const std::vector<std::vector<Sentence>>& outputs,
                                 const Vocabulary& vocab, const CorruptionSpec& spec);

}  // namespace styleobf
