#include "styleobf/fairness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace styleobf {

namespace {

const std::vector<std::string> kAttrWords[2] = {
    {"lol", "omg", "haha", "yikes", "kinda", "sorta"},
    {"indeed", "rather", "moreover", "certainly", "evidently", "frankly"},
};
const std::vector<std::string> kClassNouns[2] = {
    {"quiz", "exam", "homework", "lecture", "notes", "essay"},
    {"mural", "canvas", "gallery", "sculpture", "portrait", "exhibit"},
};
const std::vector<std::string> kNeutralNouns = {"thing", "stuff", "plan", "spot"};
const std::vector<std::string> kVerbs = {"saw", "liked", "found", "made", "did", "got"};
const std::vector<std::string> kSubjects = {"i", "we", "they"};

std::string pick(const std::vector<std::string>& words, Rng& rng) {
  return words[rng.uniform_int(words.size())];
}

std::string proxy_line(int label, int attr, double noise, Rng& rng) {
  // Two nouns from the own class plus one from the other class; the own
  // class keeps a strict majority unless noise blanks one own noun out.
  std::size_t i1 = rng.uniform_int(kClassNouns[label].size());
  std::size_t i2 = rng.uniform_int(kClassNouns[label].size() - 1);
  if (i2 >= i1) ++i2;
  std::vector<std::string> nouns = {kClassNouns[label][i1], kClassNouns[label][i2],
                                    pick(kClassNouns[1 - label], rng)};
  if (rng.uniform01() < noise) nouns[1] = pick(kNeutralNouns, rng);
  rng.shuffle(nouns);

  std::string line = pick(kAttrWords[attr], rng);
  line += " " + pick(kSubjects, rng) + " " + pick(kVerbs, rng);
  line += " " + nouns[0] + " " + nouns[1] + " and " + nouns[2];
  if (rng.uniform01() < 0.5) line += " " + pick(kAttrWords[attr], rng);
  return line;
}

}  // namespace

ProxyCorpus generate_proxy_corpus(long per_cell, double noise, uint64_t seed) {
  if (per_cell <= 0) throw ConfigError("generate_proxy_corpus: per_cell must be positive");
  if (noise < 0.0 || noise >= 1.0)
    throw ConfigError("generate_proxy_corpus: noise must lie in [0, 1)");

  Rng rng(mix64(seed, 0xFA17));
  std::vector<std::string> lines;
  std::vector<std::pair<int, int>> cells;  // (label, attr) per line
  for (int label = 0; label < 2; ++label) {
    for (int attr = 0; attr < 2; ++attr) {
      for (long i = 0; i < per_cell; ++i) {
        lines.push_back(proxy_line(label, attr, noise, rng));
        cells.emplace_back(label, attr);
      }
    }
  }

  ProxyCorpus corpus;
  corpus.vocab = build_vocabulary({lines}, 1);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    FairnessExample ex;
    ex.text = tokenize(corpus.vocab, lines[i]);
    ex.label = cells[i].first;
    ex.attr = cells[i].second;
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

ImbalancedSplit build_imbalanced_split(const std::vector<FairnessExample>& pool,
                                       double ratio, long train_per_class,
                                       long test_per_class, uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0)
    throw ConfigError("build_imbalanced_split: ratio must lie in (0, 1)");
  if (train_per_class <= 0 || test_per_class <= 0)
    throw ConfigError("build_imbalanced_split: split sizes must be positive");

  std::array<std::vector<const FairnessExample*>, 4> buckets;  // index = label*2 + attr
  for (const auto& ex : pool) {
    if (ex.label < 0 || ex.label > 1 || ex.attr < 0 || ex.attr > 1)
      throw DataError("build_imbalanced_split: labels and attributes must be 0 or 1");
    buckets[static_cast<std::size_t>(ex.label * 2 + ex.attr)].push_back(&ex);
  }

  Rng rng(mix64(seed, 0x1BA1));
  for (auto& bucket : buckets) rng.shuffle(bucket);

  // Class 1 pairs with attribute 1 at rate `ratio`; class 0 reverses the
  // pairing, which keeps both marginals balanced.
  const long maj_train = std::lround(ratio * static_cast<double>(train_per_class));
  const long min_train = train_per_class - maj_train;
  const long maj_test = std::lround(ratio * static_cast<double>(test_per_class));
  const long min_test = test_per_class - maj_test;
  if (min_test < 1)
    throw DataError("build_imbalanced_split: test split has an empty minority cell; "
                    "lower the ratio or enlarge the test size");

  ImbalancedSplit split;
  std::array<std::size_t, 4> used = {0, 0, 0, 0};
  auto take = [&](int label, int attr, long count, std::vector<FairnessExample>& out) {
    auto& bucket = buckets[static_cast<std::size_t>(label * 2 + attr)];
    std::size_t& cursor = used[static_cast<std::size_t>(label * 2 + attr)];
    if (cursor + static_cast<std::size_t>(count) > bucket.size()) {
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "build_imbalanced_split: cell (label=%d, attr=%d) needs %ld more "
                    "examples but only %zu remain",
                    label, attr, count, bucket.size() - cursor);
      throw DataError(buf);
    }
    for (long i = 0; i < count; ++i) out.push_back(*bucket[cursor++]);
  };

  for (int label = 0; label < 2; ++label) {
    const int maj_attr = label;  // class 1 <-> attr 1, class 0 <-> attr 0
    take(label, maj_attr, maj_train, split.train);
    take(label, 1 - maj_attr, min_train, split.train);
    take(label, maj_attr, maj_test, split.test);
    take(label, 1 - maj_attr, min_test, split.test);
  }
  return split;
}

MultiDomainDataset attr_domain_dataset(const ProxyCorpus& corpus, double train_fraction) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw ConfigError("attr_domain_dataset: train_fraction must lie in (0, 1)");

  // Interleave classes within each attribute bucket so that a prefix slice
  // keeps the content mix balanced.
  std::array<std::array<std::vector<const Sentence*>, 2>, 2> by_attr_class;
  for (const auto& ex : corpus.examples) {
    if (ex.label < 0 || ex.label > 1 || ex.attr < 0 || ex.attr > 1)
      throw DataError("attr_domain_dataset: labels and attributes must be 0 or 1");
    by_attr_class[static_cast<std::size_t>(ex.attr)][static_cast<std::size_t>(ex.label)]
        .push_back(&ex.text);
  }

  MultiDomainDataset ds;
  ds.vocab = corpus.vocab;
  ds.num_domains = 2;
  ds.train.resize(2);
  ds.test.resize(2);
  for (int attr = 0; attr < 2; ++attr) {
    std::vector<const Sentence*> merged;
    const auto& c0 = by_attr_class[static_cast<std::size_t>(attr)][0];
    const auto& c1 = by_attr_class[static_cast<std::size_t>(attr)][1];
    for (std::size_t i = 0; i < std::max(c0.size(), c1.size()); ++i) {
      if (i < c0.size()) merged.push_back(c0[i]);
      if (i < c1.size()) merged.push_back(c1[i]);
    }
    if (merged.size() < 2)
      throw DataError("attr_domain_dataset: attribute group too small to split");
    const auto cut = static_cast<std::size_t>(train_fraction * static_cast<double>(merged.size()));
    const std::size_t train_count = std::max<std::size_t>(1, std::min(cut, merged.size() - 1));
    for (std::size_t i = 0; i < merged.size(); ++i) {
      auto& side = i < train_count ? ds.train[static_cast<std::size_t>(attr)]
                                   : ds.test[static_cast<std::size_t>(attr)];
      side.push_back(*merged[i]);
    }
  }
  ds.validate();
  return ds;
}

namespace {

double percent_correct(const std::vector<PredictionRecord>& records) {
  if (records.empty()) throw DataError("percent_correct: no prediction records");
  long hits = 0;
  for (const auto& r : records)
    if (r.predicted == r.true_label) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(records.size());
}

}  // namespace

std::vector<FairnessRow> fairness_experiment(const ProxyCorpus& corpus,
                                             const ObfuscatorModel& obf,
                                             const std::vector<double>& ratios,
                                             long train_per_class, long test_per_class,
                                             const ClassifierConfig& clf_cfg,
                                             uint64_t seed) {
  if (ratios.empty()) throw ConfigError("fairness_experiment: no ratios given");
  if (obf.vocab_hash() != corpus.vocab.hash())
    throw DataError("fairness_experiment: obfuscator vocabulary does not match the corpus");

  std::vector<FairnessRow> rows;
  for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
    const double ratio = ratios[ri];
    const ImbalancedSplit split = build_imbalanced_split(
        corpus.examples, ratio, train_per_class, test_per_class, mix64(seed, 200 + ri));

    std::vector<LabeledSentence> train_orig;
    for (const auto& ex : split.train) train_orig.push_back({ex.text, ex.label});
    std::vector<Sentence> test_texts, test_obf;
    std::vector<int> test_labels, test_attrs;
    for (const auto& ex : split.test) {
      test_texts.push_back(ex.text);
      test_obf.push_back(obf.obfuscate(ex.text));
      test_labels.push_back(ex.label);
      test_attrs.push_back(ex.attr);
    }

    // One classifier per ratio, trained on the original imbalanced text, then
    // evaluated on the original and on the obfuscated test sentences.
    ClassifierConfig cfg_o = clf_cfg;
    cfg_o.seed = mix64(seed, 300 + ri);
    const TextClassifier clf = train_classifier(train_orig, corpus.vocab, 2, cfg_o);

    const auto rec_orig = classify(clf, test_texts, test_labels, test_attrs);
    const auto rec_obf = classify(clf, test_obf, test_labels, test_attrs);

    FairnessRow row;
    row.ratio = ratio;
    row.gap_original = std::abs(tpr_gap(rec_orig, 1, 1));
    row.gap_obfuscated = std::abs(tpr_gap(rec_obf, 1, 1));
    row.acc_original = percent_correct(rec_orig);
    row.acc_obfuscated = percent_correct(rec_obf);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace styleobf
