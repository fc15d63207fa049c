#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "styleobf/frequency.hpp"
#include "styleobf/synthetic.hpp"

using namespace styleobf;

namespace {

std::string temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("styleobf_synth_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::map<std::string, long> count_tokens(const std::vector<std::string>& lines) {
  std::map<std::string, long> counts;
  for (const auto& line : lines)
    for (const auto& tok : split_whitespace(line)) ++counts[tok];
  return counts;
}

}  // namespace

TEST_CASE("review corpus: frequency ranking is stable at full size") {
  // Same derivation as make_synthetic_build with the default seed.
  Rng rng = Rng(1).derive(33);
  const auto lines = generate_review_corpus(33000, rng);
  REQUIRE(lines.size() == 33000);

  const std::vector<std::string> expect = {
      "the", "was",  "and", "great",   "this", "a",    "it",  "to", "food", "of",
      "i",   "place", "for", "good",    "service", "they", "are", "in", "very", "my"};
  const auto top = top_frequency_words(lines, 20);
  REQUIRE(top.size() == 20);
  CHECK(top == expect);
}

TEST_CASE("review corpus is deterministic per seed") {
  Rng a = Rng(5).derive(33);
  Rng b = Rng(5).derive(33);
  CHECK(generate_review_corpus(200, a) == generate_review_corpus(200, b));
}

TEST_CASE("corruption spec markers parse and round trip") {
  CorruptionSpec spec;
  spec.words = {{"great", "food"}, {"place"}, {"service"}};
  CHECK(spec.marker(0, "great") == "00great00");
  CHECK(spec.marker(1, "place") == "11place11");
  CHECK(spec.marker(2, "service") == "22service22");

  int dom = -1;
  std::string base;
  CHECK(spec.is_marker("00food00", &dom, &base));
  CHECK(dom == 0);
  CHECK(base == "food");
  CHECK(spec.is_marker("22service22", &dom, &base));
  CHECK(dom == 2);
  CHECK(!spec.is_marker("food", nullptr, nullptr));
  CHECK(!spec.is_marker("00food11", nullptr, nullptr));
  CHECK(!spec.is_marker("33food33", nullptr, nullptr));  // no such domain
  CHECK(!spec.is_marker("00nope00", nullptr, nullptr));  // not a listed word

  const std::string dir = temp_dir("spec");
  spec.save(dir + "/corruption.json");
  const CorruptionSpec loaded = CorruptionSpec::load(dir + "/corruption.json");
  CHECK(loaded.words == spec.words);
}

TEST_CASE("synthetic build: domain word blocks, corruption, references") {
  SyntheticConfig cfg;
  cfg.train_size = 3000;
  cfg.test_size = 300;
  cfg.seed = 4;
  const SyntheticBuild build = make_synthetic_build(cfg);
  const auto& ds = build.dataset;
  REQUIRE(ds.num_domains == 3);

  // per-domain split sizes
  for (int j = 0; j < 3; ++j) {
    CHECK(ds.train[static_cast<size_t>(j)].size() == 1000);
    CHECK(ds.test[static_cast<size_t>(j)].size() == 100);
  }

  // chosen words: disjoint across domains, frequency-descending blocks
  Rng base_rng = Rng(cfg.seed).derive(33);
  const auto base_lines = generate_review_corpus(3300, base_rng);
  const auto counts = count_tokens(base_lines);
  std::set<std::string> seen;
  long prev_block_min = std::numeric_limits<long>::max();
  for (const auto& block : build.corruption.words) {
    REQUIRE(block.size() == 5);
    long block_max = 0, block_min = std::numeric_limits<long>::max();
    for (const auto& w : block) {
      CHECK(!seen.count(w));
      seen.insert(w);
      block_max = std::max(block_max, counts.at(w));
      block_min = std::min(block_min, counts.at(w));
    }
    CHECK(block_max <= prev_block_min);  // later blocks are rarer overall
    prev_block_min = block_min;
    // within a block, words are listed most-frequent first
    for (size_t k = 1; k < block.size(); ++k)
      CHECK(counts.at(block[k - 1]) >= counts.at(block[k]));
  }

  // corruption hits exactly the in-domain words; references align token-wise
  for (int j = 0; j < 3; ++j) {
    const auto sj = static_cast<size_t>(j);
    for (size_t i = 0; i < ds.train[sj].size(); ++i) {
      const Sentence& corrupted = ds.train[sj][i];
      const Sentence& ref = build.train_refs[sj][i];
      REQUIRE(corrupted.length() == ref.length());
      for (size_t t = 0; t < corrupted.ids.size(); ++t) {
        const std::string tok = ds.vocab.token(corrupted.ids[t]);
        const std::string ref_tok = ds.vocab.token(ref.ids[t]);
        int dom = -1;
        std::string base;
        if (build.corruption.is_marker(tok, &dom, &base)) {
          CHECK(dom == j);  // only own-domain markers appear
          CHECK(base == ref_tok);
        } else {
          CHECK(tok == ref_tok);
          // in-domain listed words must all be corrupted
          const auto& own = build.corruption.words[sj];
          CHECK(std::find(own.begin(), own.end(), tok) == own.end());
        }
      }
    }
  }
}

TEST_CASE("synthetic build round trips through disk") {
  SyntheticConfig cfg;
  cfg.train_size = 600;
  cfg.test_size = 60;
  cfg.seed = 9;
  const SyntheticBuild build = make_synthetic_build(cfg);
  const std::string dir = temp_dir("build");
  save_synthetic_build(build, dir);
  const SyntheticBuild loaded = load_synthetic_build(dir);
  CHECK(loaded.dataset.vocab.hash() == build.dataset.vocab.hash());
  CHECK(loaded.corruption.words == build.corruption.words);
  CHECK(loaded.dataset.train[1][3] == build.dataset.train[1][3]);
  CHECK(loaded.train_refs[2][5] == build.train_refs[2][5]);
  CHECK(loaded.test_refs[0][1] == build.test_refs[0][1]);
}

TEST_CASE("corruption stats: identity output is all remaining") {
  SyntheticConfig cfg;
  cfg.train_size = 600;
  cfg.test_size = 60;
  cfg.seed = 2;
  const SyntheticBuild build = make_synthetic_build(cfg);
  const auto stats =
      corruption_stats(build.dataset.test, build.dataset.test, build.dataset.vocab, build.corruption);
  CHECK(stats.remaining == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(stats.corrected == doctest::Approx(0.0));
  CHECK(stats.removed == doctest::Approx(0.0));
  CHECK(stats.spread == doctest::Approx(0.0));
}

TEST_CASE("corruption stats: reference output is all corrected, no spread") {
  SyntheticConfig cfg;
  cfg.train_size = 600;
  cfg.test_size = 60;
  cfg.seed = 2;
  const SyntheticBuild build = make_synthetic_build(cfg);
  const auto stats =
      corruption_stats(build.dataset.test, build.test_refs, build.dataset.vocab, build.corruption);
  CHECK(stats.corrected == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(stats.remaining == doctest::Approx(0.0));
  CHECK(stats.removed == doctest::Approx(0.0));
  CHECK(stats.spread == doctest::Approx(0.0));
}

TEST_CASE("corruption stats: hand-built mixed case") {
  CorruptionSpec spec;
  spec.words = {{"great"}, {"place"}};
  Vocabulary v;
  for (const auto& w : {"great", "place", "food", "meal", "the", "00great00", "11place11"})
    v.add(w);

  // domain 0: marker corrected, out-of-domain base "place" spread into a marker
  // domain 1: marker kept, out-of-domain base "great" left alone
  const std::vector<std::vector<Sentence>> originals = {
      {tokenize(v, "00great00 place")},
      {tokenize(v, "11place11 great")},
  };
  const std::vector<std::vector<Sentence>> outputs = {
      {tokenize(v, "great 11place11")},
      {tokenize(v, "11place11 great")},
  };
  const auto stats = corruption_stats(originals, outputs, v, spec);
  CHECK(stats.corrected == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(stats.remaining == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(stats.removed == doctest::Approx(0.0));
  CHECK(stats.spread == doctest::Approx(50.0).epsilon(1e-9));
}

TEST_CASE("corruption stats: removed markers and the percentages sum to 100") {
  CorruptionSpec spec;
  spec.words = {{"great", "food"}, {"place"}};
  Vocabulary v;
  for (const auto& w :
       {"great", "food", "place", "meal", "the", "00great00", "00food00", "11place11"})
    v.add(w);

  const std::vector<std::vector<Sentence>> originals = {
      {tokenize(v, "00great00 meal 00food00")},
      {tokenize(v, "the 11place11")},
  };
  const std::vector<std::vector<Sentence>> outputs = {
      {tokenize(v, "great meal 00food00")},
      {tokenize(v, "the meal")},
  };
  const auto stats = corruption_stats(originals, outputs, v, spec);
  CHECK(stats.corrected == doctest::Approx(25.0).epsilon(1e-9));
  CHECK(stats.remaining == doctest::Approx(25.0).epsilon(1e-9));
  CHECK(stats.removed == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(stats.corrected + stats.remaining + stats.removed == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("corruption stats require markers somewhere") {
  CorruptionSpec spec;
  spec.words = {{"great"}, {"place"}};
  Vocabulary v;
  for (const auto& w : {"the", "meal"}) v.add(w);
  const std::vector<std::vector<Sentence>> originals = {{tokenize(v, "the meal")},
                                                        {tokenize(v, "the")}};
  CHECK_THROWS_AS(corruption_stats(originals, originals, v, spec), DataError);
}

TEST_CASE("synthetic config validation") {
  SyntheticConfig cfg;
  cfg.num_domains = 5;
  cfg.words_per_domain = 5;
  cfg.top_k = 20;  // 25 words needed from a 20-word pool
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.top_k = 25;
  CHECK_NOTHROW(cfg.validate());
  cfg.train_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("domain frequencies and style inputs") {
  std::vector<std::vector<std::string>> corpora = {{"a a b", "b c", "c c c"}};
  MultiDomainDataset ds;
  ds.vocab = build_vocabulary(corpora, 1);
  ds.num_domains = 2;
  ds.train = {{tokenize(ds.vocab, "a a b")}, {tokenize(ds.vocab, "b c"), tokenize(ds.vocab, "c c c")}};
  ds.test = {{tokenize(ds.vocab, "a")}, {tokenize(ds.vocab, "c")}};

  const FrequencyTable table = domain_frequencies(ds);
  CHECK(table.num_domains() == 2);
  CHECK(table.freq(0, ds.vocab.id("a")) == doctest::Approx(2.0 / 3.0));
  CHECK(table.freq(0, ds.vocab.id("b")) == doctest::Approx(1.0 / 3.0));
  CHECK(table.freq(1, ds.vocab.id("b")) == doctest::Approx(1.0 / 5.0));
  CHECK(table.freq(1, ds.vocab.id("c")) == doctest::Approx(4.0 / 5.0));
  CHECK(table.freq(1, ds.vocab.id("a")) == doctest::Approx(0.0));

  const std::string dir = temp_dir("freq");
  table.save(dir + "/freq.json", ds.vocab);
  const FrequencyTable loaded = FrequencyTable::load(dir + "/freq.json", ds.vocab);
  CHECK((loaded.freq - table.freq).cwiseAbs().maxCoeff() < 1e-12);

  Vocabulary other;
  other.add("zzz");
  CHECK_THROWS_AS(FrequencyTable::load(dir + "/freq.json", other), DataError);
}
