#include "styleobf/frequency.hpp"

#include <fstream>
#include <json.hpp>

namespace styleobf {

using json = nlohmann::json;

FrequencyTable domain_frequencies(const MultiDomainDataset& ds) {
  ds.validate();
  FrequencyTable table;
  table.vocab_hash = ds.vocab.hash();
  table.freq = Eigen::MatrixXd::Zero(ds.num_domains, ds.vocab.size());
  for (int j = 0; j < ds.num_domains; ++j) {
    long total = 0;
    for (const auto& s : ds.train[static_cast<size_t>(j)]) {
      for (int id : s.ids) {
        table.freq(j, id) += 1.0;
        ++total;
      }
    }
    if (total == 0) throw DataError("domain_frequencies: empty domain " + std::to_string(j));
    table.freq.row(j) /= static_cast<double>(total);
  }
  return table;
}

void FrequencyTable::save(const std::string& path, const Vocabulary& vocab) const {
  if (vocab.hash() != vocab_hash)
    throw DataError("frequency table does not match vocabulary");
  if (vocab.size() != vocab_size())
    throw DataError("frequency table column count does not match vocabulary");
  json j;
  j["vocab_hash"] = to_hex(vocab_hash);
  json words = json::object();
  for (int w = 0; w < vocab_size(); ++w) {
    std::vector<double> per_domain;
    for (int d = 0; d < num_domains(); ++d) per_domain.push_back(freq(d, w));
    words[vocab.token(w)] = per_domain;
  }
  j["frequencies"] = std::move(words);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write frequency table: " + path);
  out << j.dump(2) << "\n";
}

FrequencyTable FrequencyTable::load(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read frequency table: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed frequency table " + path + ": " + e.what());
  }
  if (!j.contains("vocab_hash") || !j.contains("frequencies"))
    throw DataError("frequency table missing fields: " + path);
  FrequencyTable table;
  if (j["vocab_hash"].get<std::string>() != to_hex(vocab.hash()))
    throw DataError("frequency table was built for a different vocabulary: " + path);
  table.vocab_hash = vocab.hash();
  const auto& words = j["frequencies"];
  int num_domains = -1;
  for (auto it = words.begin(); it != words.end(); ++it) {
    const int d = static_cast<int>(it.value().size());
    if (num_domains < 0)
      num_domains = d;
    else if (num_domains != d)
      throw DataError("inconsistent domain counts in frequency table: " + path);
  }
  if (num_domains <= 0) throw DataError("empty frequency table: " + path);
  table.freq = Eigen::MatrixXd::Zero(num_domains, vocab.size());
  for (auto it = words.begin(); it != words.end(); ++it) {
    if (!vocab.contains(it.key()))
      throw DataError("frequency table token not in vocabulary: " + it.key());
    const int w = vocab.id(it.key());
    for (int d = 0; d < num_domains; ++d)
      table.freq(d, w) = it.value()[static_cast<size_t>(d)].get<double>();
  }
  return table;
}

}  // namespace styleobf
