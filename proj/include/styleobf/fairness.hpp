#pragma once

#include "styleobf/metrics.hpp"
#include "styleobf/obfuscator.hpp"

namespace styleobf {

struct FairnessExample {
  Sentence text;
  int label = 0;  // content class
  int attr = 0;   // sensitive attribute group
};

struct ProxyCorpus {
  Vocabulary vocab;
  std::vector<FairnessExample> examples;  // balanced over (label, attr) cells
};

// Two-class, two-attribute synthetic corpus. The content class is carried by
// a majority vote over three topic nouns (two from the own class, one from
// the other); the attribute shows up only as style marker tokens. With
// probability `noise`, one own-class noun is replaced by a neutral noun,
// which leaves the class signal intact but weaker.
ProxyCorpus generate_proxy_corpus(long per_cell, double noise, uint64_t seed);

struct ImbalancedSplit {
  std::vector<FairnessExample> train, test;
};

// Class and attribute marginals stay balanced; within class 1 a fraction
// `ratio` of examples carries attribute 1, and the pairing is reversed in
// class 0. Train and test draw disjoint examples from the pool.
ImbalancedSplit build_imbalanced_split(const std::vector<FairnessExample>& pool,
                                       double ratio, long train_per_class,
                                       long test_per_class, uint64_t seed);

// Attribute groups as domains, for obfuscator training on the proxy corpus.
MultiDomainDataset attr_domain_dataset(const ProxyCorpus& corpus, double train_fraction);

struct FairnessRow {
  double ratio = 0;
  double gap_original = 0;    // |TPR gap| on the untouched test split
  double gap_obfuscated = 0;  // |TPR gap| on the obfuscated test split
  double acc_original = 0;
  double acc_obfuscated = 0;
};

// For each ratio: build an imbalanced split, train a fresh classifier on the
// imbalanced train split, then measure TPR gap and accuracy on the original
// test text and on its obfuscation.
std::vector<FairnessRow> fairness_experiment(const ProxyCorpus& corpus,
                                             const ObfuscatorModel& obf,
                                             const std::vector<double>& ratios,
                                             long train_per_class, long test_per_class,
                                             const ClassifierConfig& clf_cfg,
                                             uint64_t seed);

}  // namespace styleobf
