#pragma once

#include <Eigen/Dense>

#include "styleobf/dataset.hpp"

namespace styleobf {

// Per-domain relative token frequencies over a training split.
// freq(j, w) = count of token w in domain j / total tokens in domain j.
struct FrequencyTable {
  Eigen::MatrixXd freq;   // (num_domains, vocab_size)
  uint64_t vocab_hash = 0;

  int num_domains() const { return static_cast<int>(freq.rows()); }
  int vocab_size() const { return static_cast<int>(freq.cols()); }

  void save(const std::string& path, const Vocabulary& vocab) const;
  static FrequencyTable load(const std::string& path, const Vocabulary& vocab);
};

FrequencyTable domain_frequencies(const MultiDomainDataset& ds);

}  // namespace styleobf
