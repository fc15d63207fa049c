#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <memory>

#include "styleobf/obfuscator.hpp"

using namespace styleobf;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "styleobf_obf";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

MultiDomainDataset toy_dataset() {
  std::vector<std::vector<std::string>> corpora = {
      {"red apple pie", "green pear tart", "red berry pie", "sweet apple cake",
       "green apple pie", "sweet pear pie"}};
  MultiDomainDataset ds;
  ds.vocab = build_vocabulary(corpora, 1);
  ds.num_domains = 2;
  ds.train.resize(2);
  ds.test.resize(2);
  for (int i = 0; i < 15; ++i) {
    ds.train[0].push_back(tokenize(ds.vocab, i % 2 ? "red apple pie" : "red berry pie"));
    ds.train[1].push_back(tokenize(ds.vocab, i % 2 ? "green pear tart" : "green apple tart"));
  }
  ds.test[0].push_back(tokenize(ds.vocab, "red apple pie"));
  ds.test[1].push_back(tokenize(ds.vocab, "green pear tart"));
  ds.validate();
  return ds;
}

ObfuscatorConfig small_obf_cfg() {
  ObfuscatorConfig cfg;
  cfg.hidden = 16;
  cfg.embed = 8;
  cfg.domain_embed = 4;
  cfg.dropout = 0.0;
  cfg.epochs = 3;
  cfg.batch = 8;
  cfg.seed = 11;
  return cfg;
}

PriorPool toy_prior(const Vocabulary& v, PriorMode mode, int members) {
  LMConfig cfg;
  cfg.hidden = 10;
  cfg.embed = 6;
  std::vector<std::shared_ptr<const DomainLM>> lms;
  for (int j = 0; j < members; ++j) {
    cfg.seed = 40 + static_cast<uint64_t>(j);
    lms.push_back(std::make_shared<const DomainLM>(DomainLM(v, cfg)));
  }
  return PriorPool(mode, lms);
}

StyleScoreTable zero_table(int n) {
  StyleScoreTable t;
  t.scores = Vec::Zero(n);
  return t;
}

}  // namespace

TEST_CASE("style scores match a brute-force recomputation exactly") {
  // 1000 sentences, 3 domains, overlapping vocabulary
  Rng rng(31);
  const std::vector<std::string> words = {"zeta", "omega", "kappa", "sigma", "look",
                                          "make", "turn", "walk", "only0", "only1", "only2"};
  MultiDomainDataset ds;
  std::vector<std::vector<std::string>> raw(3);
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 333; ++i) {
      std::string line;
      const int len = 3 + static_cast<int>(rng.uniform_int(5));
      for (int t = 0; t < len; ++t) {
        size_t w = rng.uniform_int(words.size());
        // make "only<j>" appear only in domain j
        while (w >= 8 && static_cast<int>(w) - 8 != j) w = rng.uniform_int(words.size());
        line += (t ? " " : "") + words[w];
      }
      raw[static_cast<size_t>(j)].push_back(line);
    }
  }
  std::vector<std::vector<std::string>> flat = {raw[0], raw[1], raw[2]};
  ds.vocab = build_vocabulary(flat, 1);
  ds.num_domains = 3;
  for (int j = 0; j < 3; ++j) {
    ds.train.push_back(tokenize_lines(ds.vocab, raw[static_cast<size_t>(j)]));
    ds.test.push_back(tokenize_lines(ds.vocab, {raw[static_cast<size_t>(j)][0]}));
  }

  const StyleScoreTable table = style_scores(domain_frequencies(ds));

  // brute force: raw counts, normalized per domain
  std::vector<std::map<std::string, double>> freq(3);
  for (int j = 0; j < 3; ++j) {
    long total = 0;
    std::map<std::string, long> counts;
    for (const auto& line : raw[static_cast<size_t>(j)])
      for (const auto& tok : split_whitespace(line)) {
        ++counts[tok];
        ++total;
      }
    for (const auto& [w, c] : counts)
      freq[static_cast<size_t>(j)][w] = static_cast<double>(c) / static_cast<double>(total);
  }
  for (int w = 0; w < ds.vocab.size(); ++w) {
    const std::string tok = ds.vocab.token(w);
    double mx = 0, mn = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 3; ++j) {
      const auto it = freq[static_cast<size_t>(j)].find(tok);
      const double f = it == freq[static_cast<size_t>(j)].end() ? 0.0 : it->second;
      mx = std::max(mx, f);
      mn = std::min(mn, f);
    }
    const double expect = (w < Vocabulary::kNumSpecial || mx == 0.0) ? 0.0 : (mx - mn) / mx;
    CHECK(table.scores[w] == doctest::Approx(expect).epsilon(1e-12));
  }

  // domain-exclusive words score exactly 1
  CHECK(table.scores[ds.vocab.id("only0")] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(table.scores[ds.vocab.id("only1")] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(table.scores[ds.vocab.id("only2")] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("style scores: equal frequencies give zero") {
  std::vector<std::vector<std::string>> corpora = {{"x y", "x y"}};
  MultiDomainDataset ds;
  ds.vocab = build_vocabulary(corpora, 1);
  ds.num_domains = 2;
  ds.train = {{tokenize(ds.vocab, "x y")}, {tokenize(ds.vocab, "x y")}};
  ds.test = ds.train;
  const StyleScoreTable table = style_scores(domain_frequencies(ds));
  CHECK(table.scores[ds.vocab.id("x")] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(table.scores[ds.vocab.id("y")] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("de-boost: gamma 0 equals the plain distribution bit for bit") {
  Rng rng(3);
  Vec logits(8);
  for (int i = 0; i < 8; ++i) logits[i] = rng.normal();
  StyleScoreTable table = zero_table(8);
  table.scores[3] = 0.9;
  table.scores[5] = 0.4;

  const Vec got = deboost_logits(logits, table, 0.0);
  const Vec plain = log_softmax_plain(logits);
  for (int i = 0; i < 8; ++i) CHECK(got[i] == plain[i]);  // exact

  // positive gamma suppresses exactly the salient entries
  const Vec pushed = deboost_logits(logits, table, 10.0);
  const Vec expect = log_softmax_plain(logits - 10.0 * table.scores);
  for (int i = 0; i < 8; ++i) CHECK(pushed[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  CHECK(pushed[3] < plain[3]);

  CHECK_THROWS_AS(deboost_logits(logits, table, -1.0), ConfigError);
  StyleScoreTable wrong = zero_table(5);
  CHECK_THROWS_AS(deboost_logits(logits, wrong, 1.0), DataError);
}

TEST_CASE("standalone straight-through sampler: always one-hot, frequency sane") {
  Rng rng(77);
  Vec logits(6);
  logits << 2.0, 0.0, -1.0, 0.5, -2.0, 1.0;
  std::vector<long> counts(6, 0);
  for (int i = 0; i < 10000; ++i) {
    const StSample s = gumbel_softmax_st(logits, 0.5, rng);
    REQUIRE(s.index >= 0);
    REQUIRE(s.index < 6);
    double sum = 0;
    for (int k = 0; k < 6; ++k) {
      CHECK((s.one_hot[k] == 0.0 || s.one_hot[k] == 1.0));
      sum += s.one_hot[k];
    }
    CHECK(sum == 1.0);
    CHECK(s.one_hot[s.index] == 1.0);
    ++counts[s.index];
  }
  // Gumbel-max samples follow softmax(logits): index 0 is the mode
  CHECK(counts[0] > counts[1]);
  CHECK(counts[1] > counts[4]);
  const double p0 = softmax_plain(logits)[0];
  CHECK(static_cast<double>(counts[0]) / 10000.0 == doctest::Approx(p0).epsilon(0.06));
}

TEST_CASE("latent sampling respects the length cap and never emits specials") {
  const MultiDomainDataset ds = toy_dataset();
  const ObfuscatorConfig cfg = small_obf_cfg();
  ObfuscatorModel model(ds.vocab, 2, cfg, PriorMode::kIntersection,
                        zero_table(ds.vocab.size()));

  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Sentence& x = ds.train[trial % 2][static_cast<size_t>(trial / 2) % 15];
    Tape tape(&model.params());
    const LatentSample lat = model.encode_decode_latent(tape, x, rng, 0.0, false);
    CHECK(lat.tokens.length() >= 1);
    CHECK(lat.tokens.length() <= x.length());
    for (const int id : lat.tokens.ids) {
      CHECK(id != Vocabulary::kPad);
      CHECK(id != Vocabulary::kBos);
      CHECK(id != Vocabulary::kEos);
    }
    CHECK(std::isfinite(tape.value_scalar(lat.log_q)));
    CHECK(lat.nodes.size() == lat.tokens.ids.size());
  }

  // single-token inputs must produce exactly one token
  const Sentence one = tokenize(ds.vocab, "pie");
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape(&model.params());
    const LatentSample lat = model.encode_decode_latent(tape, one, rng, 0.0, false);
    CHECK(lat.tokens.length() == 1);
  }
}

TEST_CASE("greedy decoding: caps, determinism, no specials") {
  const MultiDomainDataset ds = toy_dataset();
  ObfuscatorModel model(ds.vocab, 2, small_obf_cfg(), PriorMode::kIntersection,
                        zero_table(ds.vocab.size()));
  const Sentence x = tokenize(ds.vocab, "red apple pie");
  const Sentence y1 = model.obfuscate(x);
  const Sentence y2 = model.obfuscate(x);
  CHECK(y1 == y2);
  CHECK(y1.length() >= 1);
  CHECK(y1.length() <= x.length());
  for (const int id : y1.ids) CHECK(id >= Vocabulary::kNumSpecial);

  const Sentence bt = model.back_translate(y1, 1);
  CHECK(bt.length() >= 1);
  CHECK(bt.length() <= y1.length());
  CHECK_THROWS_AS(model.back_translate(y1, 5), DataError);
}

TEST_CASE("union prior rejects de-boosting everywhere") {
  const MultiDomainDataset ds = toy_dataset();
  ObfuscatorConfig cfg = small_obf_cfg();
  cfg.gamma = 3.0;
  CHECK_THROWS_AS(ObfuscatorModel(ds.vocab, 2, cfg, PriorMode::kUnion,
                                  zero_table(ds.vocab.size())),
                  ConfigError);

  const PriorPool uni = toy_prior(ds.vocab, PriorMode::kUnion, 2);
  CHECK_THROWS_AS(train_obfuscator(ds, uni, cfg), ConfigError);

  // trained-gamma 0 union model still refuses a positive override at decode time
  cfg.gamma = 0.0;
  ObfuscatorModel model(ds.vocab, 2, cfg, PriorMode::kUnion, zero_table(ds.vocab.size()));
  const Sentence x = tokenize(ds.vocab, "red apple pie");
  CHECK_NOTHROW(model.obfuscate(x));
  CHECK_THROWS_AS(model.obfuscate(x, 5.0), ConfigError);
}

TEST_CASE("training: finite, deterministic, lambda 0 reduces to reconstruction") {
  const MultiDomainDataset ds = toy_dataset();
  const PriorPool prior = toy_prior(ds.vocab, PriorMode::kIntersection, 2);

  ObfuscatorConfig cfg = small_obf_cfg();
  cfg.lambda_kl = 0.0;
  const ObfTrainResult r1 = train_obfuscator(ds, prior, cfg);
  REQUIRE(r1.epochs.size() == 3);
  for (const auto& e : r1.epochs) {
    CHECK(std::isfinite(e.loss));
    CHECK(e.loss == doctest::Approx(e.recon_nll).epsilon(1e-12));
  }
  CHECK(r1.epochs.back().loss < r1.epochs.front().loss);

  const ObfTrainResult r2 = train_obfuscator(ds, prior, cfg);
  for (size_t e = 0; e < 3; ++e) {
    CHECK(r1.epochs[e].loss == doctest::Approx(r2.epochs[e].loss).epsilon(1e-12));
    CHECK(r1.epochs[e].kl == doctest::Approx(r2.epochs[e].kl).epsilon(1e-12));
  }

  // with a positive weight the objective includes the divergence term
  ObfuscatorConfig cfg2 = small_obf_cfg();
  cfg2.lambda_kl = 0.05;
  const ObfTrainResult r3 = train_obfuscator(ds, prior, cfg2);
  for (const auto& e : r3.epochs)
    CHECK(e.loss == doctest::Approx(e.recon_nll + 0.05 * e.kl).epsilon(1e-9));
}

TEST_CASE("obfuscator checkpoint round trip") {
  const MultiDomainDataset ds = toy_dataset();
  const PriorPool prior = toy_prior(ds.vocab, PriorMode::kIntersection, 2);
  ObfuscatorConfig cfg = small_obf_cfg();
  cfg.epochs = 2;
  cfg.gamma = 1.5;
  const ObfTrainResult result = train_obfuscator(ds, prior, cfg);

  const std::string path = temp_path("obf.ckpt");
  result.model.save(path);
  const ObfuscatorModel loaded = ObfuscatorModel::load(path, ds.vocab);
  CHECK(loaded.prior_mode() == PriorMode::kIntersection);
  CHECK(loaded.num_domains() == 2);
  CHECK(loaded.config().gamma == doctest::Approx(1.5));
  CHECK(loaded.steps_taken() == result.model.steps_taken());
  CHECK((loaded.style_table().scores - result.model.style_table().scores).cwiseAbs().maxCoeff() <
        1e-12);

  const Sentence x = tokenize(ds.vocab, "sweet pear pie");
  CHECK(loaded.obfuscate(x) == result.model.obfuscate(x));
  CHECK(loaded.back_translate(x, 0) == result.model.back_translate(x, 0));

  Vocabulary other;
  other.add("nope");
  CHECK_THROWS_AS(ObfuscatorModel::load(path, other), DataError);
}

TEST_CASE("obfuscator config validation") {
  ObfuscatorConfig cfg = small_obf_cfg();
  cfg.gumbel_tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_obf_cfg();
  cfg.gamma = -0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_obf_cfg();
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_obf_cfg();
  cfg.batch = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
