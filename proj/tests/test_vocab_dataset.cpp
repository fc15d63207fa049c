#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "styleobf/dataset.hpp"

using namespace styleobf;

namespace {

std::string temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("styleobf_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("vocabulary: specials, lookup, unknown fallback") {
  Vocabulary v;
  CHECK(v.size() == Vocabulary::kNumSpecial);
  CHECK(v.token(Vocabulary::kPad) == "<pad>");
  CHECK(v.token(Vocabulary::kBos) == "<bos>");
  CHECK(v.token(Vocabulary::kEos) == "<eos>");
  CHECK(v.token(Vocabulary::kUnk) == "<unk>");

  const int a = v.add("apple");
  const int b = v.add("banana");
  CHECK(a != b);
  CHECK(v.add("apple") == a);  // idempotent
  CHECK(v.id("apple") == a);
  CHECK(v.id("never-seen") == Vocabulary::kUnk);
  CHECK(v.contains("banana"));
  CHECK(!v.contains("cherry"));
}

TEST_CASE("vocabulary hash tracks content and order") {
  Vocabulary v1, v2, v3;
  v1.add("a");
  v1.add("b");
  v2.add("a");
  v2.add("b");
  v3.add("b");
  v3.add("a");
  CHECK(v1.hash() == v2.hash());
  CHECK(v1.hash() != v3.hash());
}

TEST_CASE("build_vocabulary orders by frequency then lexicographic") {
  std::vector<std::vector<std::string>> corpora = {
      {"b b b c c a", "c a d"},
  };
  const Vocabulary v = build_vocabulary(corpora, 1);
  // counts: b=3, c=3, a=2, d=1 -> b, c (tie, lex), then a, d
  CHECK(v.token(Vocabulary::kNumSpecial + 0) == "b");
  CHECK(v.token(Vocabulary::kNumSpecial + 1) == "c");
  CHECK(v.token(Vocabulary::kNumSpecial + 2) == "a");
  CHECK(v.token(Vocabulary::kNumSpecial + 3) == "d");

  const Vocabulary cut = build_vocabulary(corpora, 2);
  CHECK(cut.contains("a"));
  CHECK(!cut.contains("d"));
}

TEST_CASE("tokenize round trip and empty-line rejection") {
  std::vector<std::vector<std::string>> corpora = {{"the cat sat"}};
  const Vocabulary v = build_vocabulary(corpora, 1);
  const Sentence s = tokenize(v, "the cat sat");
  CHECK(s.length() == 3);
  CHECK(detokenize(v, s) == "the cat sat");
  CHECK(detokenize(v, tokenize(v, "the dog sat")) == "the <unk> sat");
  CHECK_THROWS_AS(tokenize(v, "   "), DataError);
}

TEST_CASE("vocabulary file round trip") {
  const std::string dir = temp_dir("vocab");
  std::vector<std::vector<std::string>> corpora = {{"x y z z"}};
  const Vocabulary v = build_vocabulary(corpora, 1);
  v.save(dir + "/vocab.txt");
  const Vocabulary w = Vocabulary::load(dir + "/vocab.txt");
  CHECK(v.hash() == w.hash());
  CHECK(w.id("z") == v.id("z"));
}

TEST_CASE("dataset save/load round trip with references") {
  const std::string dir = temp_dir("dataset");
  std::vector<std::vector<std::string>> corpora = {{"a b", "c d", "a c"}};
  MultiDomainDataset ds;
  ds.vocab = build_vocabulary(corpora, 1);
  ds.num_domains = 2;
  ds.train = {{tokenize(ds.vocab, "a b"), tokenize(ds.vocab, "c d")}, {tokenize(ds.vocab, "a c")}};
  ds.test = {{tokenize(ds.vocab, "b a")}, {tokenize(ds.vocab, "d c")}};
  ds.validate();
  save_dataset(ds, dir);

  const MultiDomainDataset loaded = load_dataset(dir);
  CHECK(loaded.num_domains == 2);
  CHECK(loaded.vocab.hash() == ds.vocab.hash());
  REQUIRE(loaded.train.size() == 2);
  CHECK(loaded.train[0][1] == ds.train[0][1]);
  CHECK(loaded.test[1][0] == ds.test[1][0]);
  CHECK(loaded.train_size() == 3);
  CHECK(loaded.test_size() == 2);
}

TEST_CASE("load_dataset requires a test split") {
  const std::string dir = temp_dir("dataset_missing");
  std::vector<std::vector<std::string>> corpora = {{"a b"}};
  MultiDomainDataset ds;
  ds.vocab = build_vocabulary(corpora, 1);
  ds.num_domains = 1;
  ds.train = {{tokenize(ds.vocab, "a b")}};
  ds.test = {{tokenize(ds.vocab, "b a")}};
  save_dataset(ds, dir);
  std::filesystem::remove(dir + "/test.0.txt");
  CHECK_THROWS_AS(load_dataset(dir), DataError);
}

TEST_CASE("file hash is content-sensitive") {
  const std::string dir = temp_dir("hash");
  write_lines(dir + "/a.txt", {"one", "two"});
  write_lines(dir + "/b.txt", {"one", "two"});
  write_lines(dir + "/c.txt", {"one", "three"});
  CHECK(file_hash(dir + "/a.txt") == file_hash(dir + "/b.txt"));
  CHECK(file_hash(dir + "/a.txt") != file_hash(dir + "/c.txt"));
  CHECK_THROWS_AS(file_hash(dir + "/missing.txt"), DataError);
}

TEST_CASE("read_lines trims trailing newline handling consistently") {
  const std::string dir = temp_dir("lines");
  write_lines(dir + "/f.txt", {"alpha beta", "gamma"});
  const auto lines = read_lines(dir + "/f.txt");
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "alpha beta");
  CHECK(lines[1] == "gamma");
}
