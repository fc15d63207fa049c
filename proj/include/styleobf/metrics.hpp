#pragma once

#include "styleobf/classifier.hpp"

namespace styleobf {

// One classification outcome with the full probability vector and the
// sensitive attribute value of the example.
struct PredictionRecord {
  int true_label = 0;
  int predicted = 0;
  std::vector<double> probs;
  int attr = 0;
};

std::vector<PredictionRecord> classify(const TextClassifier& clf,
                                       const std::vector<Sentence>& sentences,
                                       const std::vector<int>& labels,
                                       const std::vector<int>& attrs);

void save_prediction_records(const std::string& path, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> load_prediction_records(const std::string& path);

// True-positive-rate gap for class y between attribute group a and the other
// attribute group: TPR(a, y) - TPR(other, y). Records must contain exactly
// two attribute values and each group must have examples of class y.
double tpr_gap(const std::vector<PredictionRecord>& records, int attr_a, int label_y);

// Shannon entropy in bits; probs must sum to 1 within 1e-6.
double entropy_bits(const Vec& probs);

// Percent of records whose top probability strictly exceeds the threshold.
double confident_response_rate(const std::vector<PredictionRecord>& records, double threshold);

// Percent of aligned positions (up to the shorter length) where the
// back-translation reproduces the original token, relative to the original
// length, averaged over pairs.
double bt_accuracy(const std::vector<Sentence>& originals, const std::vector<Sentence>& backtranslated);

// Percent of distinct tokens among all output tokens.
double lexical_diversity(const std::vector<Sentence>& outputs);

// Corpus-level 4-gram precision score with brevity penalty, in [0, 100].
// Zero unigram overlap yields exactly 0; zero higher-order overlap is
// epsilon-smoothed; n-gram orders absent from every candidate are skipped.
double bleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references);

// Sentence-level n-gram match score in [0, 100]: min(precision, recall) over
// pooled 1..4-gram counts, averaged over pairs.
double gleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references);

}  // namespace styleobf
