#pragma once

#include <memory>

#include "styleobf/dataset.hpp"
#include "styleobf/nn.hpp"

namespace styleobf {

struct LMConfig {
  int hidden = 128;
  int embed = 64;
  double dropout = 0.3;
  double lr = 0.001;
  double grad_clip = 5.0;
  int batch = 32;
  int epochs = 10;
  uint64_t seed = 1;

  void validate() const;
};

// Single-layer LSTM language model over one domain's sentences. Predicts
// content tokens followed by EOS; BOS is input-only.
class DomainLM {
 public:
  DomainLM(const Vocabulary& vocab, const LMConfig& cfg);

  int vocab_size() const { return vocab_size_; }
  uint64_t vocab_hash() const { return vocab_hash_; }
  const LMConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Next-token log distribution after consuming prefix; prefix[0] must be BOS.
  Vec token_log_probs(const std::vector<int>& prefix) const;
  // log p(sentence) including the closing EOS term.
  double sentence_log_likelihood(const Sentence& s) const;
  // exp(mean per-token NLL) over the corpus, EOS terms included.
  double perplexity(const std::vector<Sentence>& corpus) const;

  // Training-graph construction: summed NLL node for one sentence.
  int build_nll(Tape& tape, const Sentence& s, Rng* dropout_rng) const;

  // Per-step log-softmax nodes over inputs [BOS, y_1, .., y_n] where each y_t
  // is a one-hot (or soft) vector node on the tape. Weights stay frozen.
  std::vector<int> soft_step_log_probs(Tape& tape, const std::vector<int>& y_nodes) const;

  void save(const std::string& path) const;
  static DomainLM load(const std::string& path, const Vocabulary& vocab);

  const std::vector<double>& epoch_losses() const { return epoch_losses_; }

 private:
  friend DomainLM train_domain_lm(const std::vector<Sentence>&, const Vocabulary&, const LMConfig&);

  void forward_step_plain(int token, Vec& h, Vec& c) const;
  Vec output_log_probs_plain(const Vec& h) const;

  LMConfig cfg_;
  int vocab_size_;
  uint64_t vocab_hash_;
  ParamStore params_;
  int emb_, lstm_w_, lstm_b_, proj_w_, proj_b_;
  std::vector<double> epoch_losses_;
};

// Mean per-token NLL per epoch is recorded on the returned model.
DomainLM train_domain_lm(const std::vector<Sentence>& corpus, const Vocabulary& vocab,
                         const LMConfig& cfg);

}  // namespace styleobf
