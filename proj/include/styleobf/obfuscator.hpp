#pragma once

#include <functional>

#include "styleobf/frequency.hpp"
#include "styleobf/prior.hpp"

namespace styleobf {

// Style salience in [0, 1]: spread between the word's most and least frequent
// domains, relative to the most frequent. 0 for special tokens and words with
// zero frequency everywhere; 1 for words exclusive to one domain.
struct StyleScoreTable {
  Vec scores;  // size = vocab
};

StyleScoreTable style_scores(const FrequencyTable& freq);

// log softmax(logits - gamma * scores): output distribution with style-salient
// words de-boosted.
Vec deboost_logits(const Vec& logits, const StyleScoreTable& table, double gamma);

// Straight-through Gumbel sample of a categorical given unnormalized logits.
struct StSample {
  int index = -1;
  Vec one_hot;
};
StSample gumbel_softmax_st(const Vec& logits, double tau, Rng& rng);

struct ObfuscatorConfig {
  int hidden = 128;
  int embed = 64;
  int domain_embed = 16;
  double dropout = 0.3;
  double lambda_kl = 0.02;
  double gumbel_tau = 0.01;
  double gamma = 0.0;
  double lr = 0.001;
  double grad_clip = 5.0;
  int batch = 32;
  int epochs = 10;
  uint64_t seed = 1;
  std::string checkpoint_dir;  // when set, per-epoch checkpoints are written

  void validate() const;
};

struct LatentSample {
  std::vector<int> nodes;   // straight-through one-hot nodes, one per token
  Sentence tokens;          // sampled token ids (content only)
  int log_q = -1;           // scalar node: sum of sampled-step log q terms
  bool sampled_eos = false;
};

// Attentional sequence-to-sequence model with one shared encoder and one
// shared decoder. The decoder input carries a domain embedding (indices
// 0..M-1 for transduction toward a domain, index M for the latent direction)
// plus two normalized length features. Latent decoding is capped at the
// source length; transduction decoding is capped at the conditioning length.
class ObfuscatorModel {
 public:
  ObfuscatorModel(const Vocabulary& vocab, int num_domains, const ObfuscatorConfig& cfg,
                  PriorMode prior_mode, StyleScoreTable table);

  const ObfuscatorConfig& config() const { return cfg_; }
  int num_domains() const { return num_domains_; }
  uint64_t vocab_hash() const { return vocab_hash_; }
  PriorMode prior_mode() const { return prior_mode_; }
  const StyleScoreTable& style_table() const { return table_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  long steps_taken() const { return steps_; }

  // Training-graph latent sampling q(y|x) with the straight-through
  // estimator. De-boosting from the stored table applies when gamma > 0.
  LatentSample encode_decode_latent(Tape& tape, const Sentence& x, Rng& rng,
                                    double gamma, bool train_dropout) const;
  // Training-graph reconstruction score log p(x | y, domain).
  int reconstruction_ll(Tape& tape, const LatentSample& y, const Sentence& x,
                        int domain, Rng& rng, bool train_dropout) const;

  // Greedy latent decode (inference). gamma < 0 means "use the trained gamma".
  Sentence obfuscate(const Sentence& x, double gamma = -1.0) const;
  // Greedy transduction decode conditioned on y toward a domain.
  Sentence back_translate(const Sentence& y, int domain) const;

  void save(const std::string& path) const;
  static ObfuscatorModel load(const std::string& path, const Vocabulary& vocab);

 private:
  friend struct ObfTrainer;

  std::vector<int> encode_nodes(Tape& tape, const std::vector<int>& x_soft,
                                const std::vector<int>& x_hard) const;
  std::vector<Vec> encode_plain(const Sentence& x) const;
  Sentence greedy_decode(const std::vector<Vec>& enc_states, int domain_index,
                         int max_len, double gamma) const;

  ObfuscatorConfig cfg_;
  int vocab_size_;
  int num_domains_;
  uint64_t vocab_hash_;
  PriorMode prior_mode_;
  StyleScoreTable table_;
  ParamStore params_;
  int emb_, dom_, enc_w_, enc_b_, dec_w_, dec_b_, att_w_, ctx_w_, proj_w_, proj_b_;
  long steps_ = 0;
};

struct EpochStats {
  double loss = 0;       // mean per-sentence negative ELBO
  double recon_nll = 0;  // mean per-sentence reconstruction NLL
  double kl = 0;         // mean per-sentence log q - log prior
};

struct ObfTrainResult {
  ObfuscatorModel model;
  std::vector<EpochStats> epochs;
};

using EpochCallback = std::function<void(int epoch, const EpochStats&)>;

// Negative-ELBO training. Combining the union prior with de-boosting
// (gamma > 0) is rejected up front.
ObfTrainResult train_obfuscator(const MultiDomainDataset& ds, const PriorPool& prior,
                                const ObfuscatorConfig& cfg, const StyleScoreTable* table = nullptr,
                                const EpochCallback& on_epoch = {});

}  // namespace styleobf
