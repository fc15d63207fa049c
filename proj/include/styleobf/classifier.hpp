#pragma once

#include "styleobf/dataset.hpp"
#include "styleobf/nn.hpp"

namespace styleobf {

struct ClassifierConfig {
  int hidden = 128;
  int embed = 64;
  double dropout = 0.3;
  double lr = 0.001;
  double grad_clip = 5.0;
  int batch = 32;
  int epochs = 5;
  uint64_t seed = 1;

  void validate() const;
};

struct LabeledSentence {
  Sentence text;
  int label = 0;
};

// LSTM sentence classifier: max-pool over hidden states, then a linear
// readout over classes.
class TextClassifier {
 public:
  TextClassifier(const Vocabulary& vocab, int num_classes, const ClassifierConfig& cfg);

  int num_classes() const { return num_classes_; }
  uint64_t vocab_hash() const { return vocab_hash_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  Vec class_probs(const Sentence& s) const;
  int predict(const Sentence& s) const;
  double accuracy(const std::vector<LabeledSentence>& data) const;

  int build_nll(Tape& tape, const LabeledSentence& ex, Rng* dropout_rng) const;

  void save(const std::string& path) const;
  static TextClassifier load(const std::string& path, const Vocabulary& vocab);

  const std::vector<double>& epoch_losses() const { return epoch_losses_; }

 private:
  friend TextClassifier train_classifier(const std::vector<LabeledSentence>&,
                                         const Vocabulary&, int, const ClassifierConfig&);

  ClassifierConfig cfg_;
  int vocab_size_;
  int num_classes_;
  uint64_t vocab_hash_;
  ParamStore params_;
  int emb_, lstm_w_, lstm_b_, out_w_, out_b_;
  std::vector<double> epoch_losses_;
};

// Requires at least two distinct labels in the training data.
TextClassifier train_classifier(const std::vector<LabeledSentence>& data,
                                const Vocabulary& vocab, int num_classes,
                                const ClassifierConfig& cfg);

// Labeled view of a multi-domain dataset: label = domain index.
std::vector<LabeledSentence> domain_labeled(const std::vector<std::vector<Sentence>>& by_domain);

}  // namespace styleobf
