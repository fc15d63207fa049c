#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "styleobf/prior.hpp"

using namespace styleobf;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "styleobf_prior";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

Vocabulary word_vocab(int n) {
  Vocabulary v;
  for (int i = 0; i < n; ++i) v.add("w" + std::to_string(i));
  return v;
}

std::shared_ptr<const DomainLM> toy_lm(const Vocabulary& v, uint64_t seed) {
  LMConfig cfg;
  cfg.hidden = 12;
  cfg.embed = 8;
  cfg.seed = seed;
  return std::make_shared<const DomainLM>(DomainLM(v, cfg));
}

Sentence random_sentence(const Vocabulary& v, Rng& rng) {
  Sentence s;
  const int len = 1 + static_cast<int>(rng.uniform_int(8));
  for (int i = 0; i < len; ++i)
    s.ids.push_back(Vocabulary::kNumSpecial +
                    static_cast<int>(rng.uniform_int(v.size() - Vocabulary::kNumSpecial)));
  return s;
}

// direct recomputation from member per-token distributions
double oracle_intersection(const PriorPool& pool, const Sentence& y) {
  std::vector<double> lls;
  for (int j = 0; j < pool.num_members(); ++j) lls.push_back(pool.member(j).sentence_log_likelihood(y));
  return logsumexp_plain(lls) - std::log(static_cast<double>(pool.num_members()));
}

double oracle_union(const PriorPool& pool, const Sentence& y) {
  double total = 0;
  std::vector<int> prefix = {Vocabulary::kBos};
  for (size_t t = 0; t <= y.ids.size(); ++t) {
    const int target = t < y.ids.size() ? y.ids[t] : Vocabulary::kEos;
    double lo = std::numeric_limits<double>::infinity();
    for (int j = 0; j < pool.num_members(); ++j)
      lo = std::min(lo, pool.member(j).token_log_probs(prefix)[target]);
    total += lo;
    if (t < y.ids.size()) prefix.push_back(y.ids[t]);
  }
  return total;
}

}  // namespace

TEST_CASE("prior oracle equivalence on 100 random sentences") {
  const Vocabulary v = word_vocab(50);
  std::vector<std::shared_ptr<const DomainLM>> members = {toy_lm(v, 1), toy_lm(v, 2), toy_lm(v, 3)};
  const PriorPool inter(PriorMode::kIntersection, members);
  const PriorPool uni(PriorMode::kUnion, members);
  const PriorPool single(PriorMode::kSingle, {members[1]});

  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    const Sentence y = random_sentence(v, rng);
    CHECK(inter.log_score(y) == doctest::Approx(oracle_intersection(inter, y)).epsilon(1e-6));
    CHECK(uni.log_score(y) == doctest::Approx(oracle_union(uni, y)).epsilon(1e-6));
    CHECK(single.log_score(y) ==
          doctest::Approx(members[1]->sentence_log_likelihood(y)).epsilon(1e-9));
  }
}

TEST_CASE("prior token scores pool the member distributions") {
  const Vocabulary v = word_vocab(20);
  std::vector<std::shared_ptr<const DomainLM>> members = {toy_lm(v, 4), toy_lm(v, 5)};
  const PriorPool inter(PriorMode::kIntersection, members);
  const PriorPool uni(PriorMode::kUnion, members);

  const std::vector<int> prefix = {Vocabulary::kBos, v.id("w3"), v.id("w7")};
  const Vec lp0 = members[0]->token_log_probs(prefix);
  const Vec lp1 = members[1]->token_log_probs(prefix);
  const Vec got_i = inter.token_log_scores(prefix);
  const Vec got_u = uni.token_log_scores(prefix);
  for (int w = 0; w < v.size(); ++w) {
    const double mix = std::log(0.5 * std::exp(lp0[w]) + 0.5 * std::exp(lp1[w]));
    CHECK(got_i[w] == doctest::Approx(mix).epsilon(1e-9));
    CHECK(got_u[w] == doctest::Approx(std::min(lp0[w], lp1[w])).epsilon(1e-12));
  }
}

TEST_CASE("prior training-graph score matches the hard scorer") {
  const Vocabulary v = word_vocab(15);
  std::vector<std::shared_ptr<const DomainLM>> members = {toy_lm(v, 6), toy_lm(v, 7), toy_lm(v, 8)};
  Rng rng(123);
  const Sentence y = random_sentence(v, rng);

  for (const PriorMode mode : {PriorMode::kIntersection, PriorMode::kUnion, PriorMode::kSingle}) {
    const PriorPool pool(mode, mode == PriorMode::kSingle
                                   ? std::vector<std::shared_ptr<const DomainLM>>{members[0]}
                                   : members);
    ParamStore dummy;
    Tape tape(&dummy);
    std::vector<int> y_nodes;
    for (const int id : y.ids) {
      Vec one = Vec::Zero(v.size());
      one[id] = 1.0;
      y_nodes.push_back(tape.constant(one));
    }
    const int node = pool.build_score(tape, y_nodes, y.ids);
    CHECK(tape.value_scalar(node) == doctest::Approx(pool.log_score(y)).epsilon(1e-8));
  }
}

TEST_CASE("prior pool guards") {
  const Vocabulary v = word_vocab(10);
  const Vocabulary w = word_vocab(11);
  auto a = toy_lm(v, 1);
  auto b = toy_lm(v, 2);
  auto c = toy_lm(w, 3);

  CHECK_THROWS_AS(PriorPool(PriorMode::kIntersection, {}), ConfigError);
  CHECK_THROWS_AS(PriorPool(PriorMode::kSingle, {a, b}), ConfigError);
  CHECK_THROWS_AS(PriorPool(PriorMode::kIntersection, {a, c}), DataError);  // vocab mismatch
  CHECK_NOTHROW(PriorPool(PriorMode::kUnion, {a, b}));
}

TEST_CASE("prior mode string round trip") {
  for (const PriorMode m : {PriorMode::kIntersection, PriorMode::kUnion, PriorMode::kSingle})
    CHECK(prior_mode_from_string(prior_mode_to_string(m)) == m);
  CHECK_THROWS_AS(prior_mode_from_string("bogus"), ConfigError);
}

TEST_CASE("prior descriptor round trip") {
  const Vocabulary v = word_vocab(12);
  auto a = toy_lm(v, 21);
  auto b = toy_lm(v, 22);
  const std::string pa = temp_path("a.ckpt"), pb = temp_path("b.ckpt");
  a->save(pa);
  b->save(pb);
  const std::string desc = temp_path("prior.json");
  save_prior_descriptor(desc, PriorMode::kUnion, {pa, pb});

  const PriorPool pool = load_prior_from_descriptor(desc, v);
  CHECK(pool.mode() == PriorMode::kUnion);
  CHECK(pool.num_members() == 2);
  const PriorPool direct(PriorMode::kUnion, {a, b});
  Rng rng(5);
  const Sentence y = random_sentence(v, rng);
  CHECK(pool.log_score(y) == doctest::Approx(direct.log_score(y)).epsilon(1e-12));
}

TEST_CASE("misclassified-sentence prior data requirements") {
  // two identical domains guarantee plenty of classifier confusion
  std::vector<std::vector<std::string>> corpora = {{"p q r", "q r p", "r p q", "p r q"}};
  MultiDomainDataset ds;
  ds.vocab = build_vocabulary(corpora, 1);
  ds.num_domains = 2;
  ds.train.resize(2);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 10; ++i) {
      ds.train[static_cast<size_t>(j)].push_back(tokenize(ds.vocab, "p q r"));
      ds.train[static_cast<size_t>(j)].push_back(tokenize(ds.vocab, "r p q"));
    }
  ds.test = ds.train;

  ClassifierConfig ccfg;
  ccfg.hidden = 8;
  ccfg.embed = 4;
  ccfg.epochs = 2;
  const TextClassifier clf = train_classifier(domain_labeled(ds.train), ds.vocab, 2, ccfg);

  LMConfig lm_cfg;
  lm_cfg.hidden = 8;
  lm_cfg.embed = 4;
  lm_cfg.epochs = 1;
  // identical domains: about half of all 40 sentences are misclassified
  CHECK_NOTHROW(train_misclassified_lm(ds, clf, lm_cfg, 1));
  CHECK_THROWS_AS(train_misclassified_lm(ds, clf, lm_cfg, 1000), DataError);
}
