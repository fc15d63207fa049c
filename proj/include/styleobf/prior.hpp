#pragma once

#include <memory>

#include "styleobf/classifier.hpp"
#include "styleobf/lang_model.hpp"

namespace styleobf {

enum class PriorMode { kIntersection, kUnion, kSingle };

PriorMode prior_mode_from_string(const std::string& s);
std::string prior_mode_to_string(PriorMode mode);

// Sentence prior assembled from domain language models.
//  - intersection: utterance-level mean of the member likelihoods,
//    log score = logsumexp_j(log p_j(y)) - log M.
//  - union: per-step minimum over member next-token log-probabilities,
//    summed over steps (unnormalized product of minima).
//  - single: one member model's log-likelihood.
class PriorPool {
 public:
  PriorPool(PriorMode mode, std::vector<std::shared_ptr<const DomainLM>> members);

  PriorMode mode() const { return mode_; }
  int num_members() const { return static_cast<int>(members_.size()); }
  uint64_t vocab_hash() const { return members_.front()->vocab_hash(); }
  const DomainLM& member(int j) const { return *members_[static_cast<size_t>(j)]; }

  // Hard-token log score (EOS term included).
  double log_score(const Sentence& y) const;
  // Next-token pooled log scores after the prefix (prefix[0] must be BOS).
  Vec token_log_scores(const std::vector<int>& prefix) const;
  // Training-graph score for a sampled latent: y_nodes are per-step one-hot
  // vector nodes, y_hard the matching token ids. Member weights stay frozen;
  // gradients flow to the sample nodes only.
  int build_score(Tape& tape, const std::vector<int>& y_nodes,
                  const std::vector<int>& y_hard) const;

 private:
  PriorMode mode_;
  std::vector<std::shared_ptr<const DomainLM>> members_;
};

// Descriptor file listing the mode and member checkpoint paths.
void save_prior_descriptor(const std::string& path, PriorMode mode,
                           const std::vector<std::string>& member_paths);
PriorPool load_prior_from_descriptor(const std::string& path, const Vocabulary& vocab);

// One-LM baseline priors.
//  - An oracle LM trained on uncorrupted reference text.
DomainLM train_reference_lm(const std::vector<std::vector<Sentence>>& refs,
                            const Vocabulary& vocab, const LMConfig& cfg);
//  - An LM trained on training sentences the domain classifier misclassifies.
//    Raises DataError when fewer than min_sentences qualify.
DomainLM train_misclassified_lm(const MultiDomainDataset& ds, const TextClassifier& clf,
                                const LMConfig& cfg, long min_sentences = 1000);

}  // namespace styleobf
