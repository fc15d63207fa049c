#pragma once

#include <string>
#include <vector>

#include "styleobf/vocab.hpp"

namespace styleobf {

// Multi-domain parallel corpus layout. Sentences are grouped per domain;
// the domain index of a sentence is its group index.
struct MultiDomainDataset {
  Vocabulary vocab;
  int num_domains = 0;
  std::vector<std::vector<Sentence>> train;  // [domain][i]
  std::vector<std::vector<Sentence>> test;   // [domain][i]

  void validate() const;
  long train_size() const;
  long test_size() const;
};

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

std::vector<Sentence> tokenize_lines(const Vocabulary& vocab, const std::vector<std::string>& lines);
std::vector<std::string> detokenize_all(const Vocabulary& vocab, const std::vector<Sentence>& sentences);

// Directory layout: vocab.txt plus <split>.<domain>.txt files, with optional
// parallel <split>.ref.<domain>.txt reference (pre-corruption) files.
void save_dataset(const MultiDomainDataset& ds, const std::string& dir);
MultiDomainDataset load_dataset(const std::string& dir);

bool file_exists(const std::string& path);
void ensure_dir(const std::string& dir);
uint64_t file_hash(const std::string& path);

}  // namespace styleobf
