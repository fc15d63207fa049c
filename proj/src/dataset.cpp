#include "styleobf/dataset.hpp"

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace styleobf {

void MultiDomainDataset::validate() const {
  if (num_domains <= 0) throw DataError("dataset has no domains");
  if (static_cast<int>(train.size()) != num_domains ||
      static_cast<int>(test.size()) != num_domains)
    throw DataError("dataset split count does not match num_domains");
  for (int j = 0; j < num_domains; ++j) {
    if (train[j].empty()) throw DataError("empty train split for domain " + std::to_string(j));
    for (const auto& s : train[j])
      if (s.ids.empty()) throw DataError("empty sentence in train split");
  }
}

long MultiDomainDataset::train_size() const {
  long n = 0;
  for (const auto& d : train) n += static_cast<long>(d.size());
  return n;
}

long MultiDomainDataset::test_size() const {
  long n = 0;
  for (const auto& d : test) n += static_cast<long>(d.size());
  return n;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (const auto& l : lines) out << l << "\n";
}

std::vector<Sentence> tokenize_lines(const Vocabulary& vocab, const std::vector<std::string>& lines) {
  std::vector<Sentence> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(tokenize(vocab, l));
  return out;
}

std::vector<std::string> detokenize_all(const Vocabulary& vocab, const std::vector<Sentence>& sentences) {
  std::vector<std::string> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(detokenize(vocab, s));
  return out;
}

void save_dataset(const MultiDomainDataset& ds, const std::string& dir) {
  ds.validate();
  ensure_dir(dir);
  ds.vocab.save(dir + "/vocab.txt");
  for (int j = 0; j < ds.num_domains; ++j) {
    write_lines(dir + "/train." + std::to_string(j) + ".txt",
                detokenize_all(ds.vocab, ds.train[j]));
    write_lines(dir + "/test." + std::to_string(j) + ".txt",
                detokenize_all(ds.vocab, ds.test[j]));
  }
}

MultiDomainDataset load_dataset(const std::string& dir) {
  MultiDomainDataset ds;
  ds.vocab = Vocabulary::load(dir + "/vocab.txt");
  for (int j = 0;; ++j) {
    const std::string train_path = dir + "/train." + std::to_string(j) + ".txt";
    const std::string test_path = dir + "/test." + std::to_string(j) + ".txt";
    if (!file_exists(train_path)) break;
    if (!file_exists(test_path))
      throw DataError("missing test split for domain " + std::to_string(j) + " in " + dir);
    ds.train.push_back(tokenize_lines(ds.vocab, read_lines(train_path)));
    ds.test.push_back(tokenize_lines(ds.vocab, read_lines(test_path)));
    ds.num_domains = j + 1;
  }
  if (ds.num_domains == 0) throw DataError("no train.<domain>.txt files found in " + dir);
  ds.validate();
  return ds;
}

bool file_exists(const std::string& path) { return fs::exists(path); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory: " + dir);
}

uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file: " + path);
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    if (got > 0) {
      for (std::streamsize i = 0; i < got; ++i) {
        h ^= static_cast<unsigned char>(buf[i]);
        h *= 0x100000001b3ull;
      }
    }
  }
  return h;
}

}  // namespace styleobf
