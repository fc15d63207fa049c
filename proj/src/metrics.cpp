#include "styleobf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <json.hpp>
#include <set>

namespace styleobf {

using json = nlohmann::json;

std::vector<PredictionRecord> classify(const TextClassifier& clf,
                                       const std::vector<Sentence>& sentences,
                                       const std::vector<int>& labels,
                                       const std::vector<int>& attrs) {
  if (sentences.size() != labels.size() || sentences.size() != attrs.size())
    throw DataError("classify: sentences, labels, and attrs must align");
  std::vector<PredictionRecord> records;
  records.reserve(sentences.size());
  for (size_t i = 0; i < sentences.size(); ++i) {
    PredictionRecord r;
    r.true_label = labels[i];
    r.attr = attrs[i];
    const Vec probs = clf.class_probs(sentences[i]);
    Eigen::Index arg;
    probs.maxCoeff(&arg);
    r.predicted = static_cast<int>(arg);
    r.probs.assign(probs.data(), probs.data() + probs.size());
    records.push_back(std::move(r));
  }
  return records;
}

void save_prediction_records(const std::string& path, const std::vector<PredictionRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write prediction records: " + path);
  for (const auto& r : records) {
    json j{{"true", r.true_label}, {"pred", r.predicted}, {"probs", r.probs}, {"attr", r.attr}};
    out << j.dump() << "\n";
  }
}

std::vector<PredictionRecord> load_prediction_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read prediction records: " + path);
  std::vector<PredictionRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("malformed prediction record in " + path + ": " + e.what());
    }
    PredictionRecord r;
    r.true_label = j.at("true").get<int>();
    r.predicted = j.at("pred").get<int>();
    r.probs = j.at("probs").get<std::vector<double>>();
    r.attr = j.at("attr").get<int>();
    records.push_back(std::move(r));
  }
  return records;
}

double tpr_gap(const std::vector<PredictionRecord>& records, int attr_a, int label_y) {
  std::set<int> attr_values;
  for (const auto& r : records) attr_values.insert(r.attr);
  if (attr_values.size() != 2)
    throw DataError("tpr_gap: records must contain exactly two attribute values");
  if (!attr_values.count(attr_a))
    throw DataError("tpr_gap: attribute value " + std::to_string(attr_a) + " not present");
  int attr_b = -1;
  for (int v : attr_values)
    if (v != attr_a) attr_b = v;

  auto tpr = [&](int attr) {
    long positives = 0, hits = 0;
    for (const auto& r : records) {
      if (r.attr != attr || r.true_label != label_y) continue;
      ++positives;
      if (r.predicted == label_y) ++hits;
    }
    if (positives == 0)
      throw DataError("tpr_gap: no class-" + std::to_string(label_y) +
                      " examples with attribute " + std::to_string(attr));
    return static_cast<double>(hits) / static_cast<double>(positives);
  };
  return tpr(attr_a) - tpr(attr_b);
}

double entropy_bits(const Vec& probs) {
  double sum = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) < 0) throw DataError("entropy_bits: negative probability");
    sum += probs(i);
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw DataError("entropy_bits: probabilities must sum to 1");
  double h = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i)
    if (probs(i) > 0) h -= probs(i) * std::log2(probs(i));
  return h;
}

double confident_response_rate(const std::vector<PredictionRecord>& records, double threshold) {
  if (records.empty()) throw DataError("confident_response_rate: no records");
  long confident = 0;
  for (const auto& r : records) {
    if (r.probs.empty()) throw DataError("confident_response_rate: record without probabilities");
    const double top = *std::max_element(r.probs.begin(), r.probs.end());
    if (top > threshold) ++confident;
  }
  return 100.0 * static_cast<double>(confident) / static_cast<double>(records.size());
}

double bt_accuracy(const std::vector<Sentence>& originals,
                   const std::vector<Sentence>& backtranslated) {
  if (originals.size() != backtranslated.size())
    throw DataError("bt_accuracy: corpus sizes differ");
  if (originals.empty()) throw DataError("bt_accuracy: empty corpus");
  double total = 0;
  for (size_t i = 0; i < originals.size(); ++i) {
    const auto& x = originals[i].ids;
    const auto& b = backtranslated[i].ids;
    if (x.empty()) throw DataError("bt_accuracy: empty original sentence");
    const size_t n = std::min(x.size(), b.size());
    long matches = 0;
    for (size_t t = 0; t < n; ++t)
      if (x[t] == b[t]) ++matches;
    total += static_cast<double>(matches) / static_cast<double>(x.size());
  }
  return 100.0 * total / static_cast<double>(originals.size());
}

double lexical_diversity(const std::vector<Sentence>& outputs) {
  std::set<int> distinct;
  long total = 0;
  for (const auto& s : outputs) {
    for (int id : s.ids) {
      distinct.insert(id);
      ++total;
    }
  }
  if (total == 0) throw DataError("lexical_diversity: no tokens");
  return 100.0 * static_cast<double>(distinct.size()) / static_cast<double>(total);
}

namespace {

using NgramCounts = std::map<std::vector<int>, long>;

NgramCounts ngram_counts(const Sentence& s, int n) {
  NgramCounts counts;
  const int len = s.length();
  for (int i = 0; i + n <= len; ++i) {
    std::vector<int> gram(s.ids.begin() + i, s.ids.begin() + i + n);
    ++counts[gram];
  }
  return counts;
}

long clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
  long matches = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) matches += std::min(count, it->second);
  }
  return matches;
}

}  // namespace

double bleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references) {
  if (candidates.size() != references.size())
    throw DataError("bleu: corpus sizes differ");
  if (candidates.empty()) throw DataError("bleu: empty corpus");
  constexpr int kMaxOrder = 4;
  constexpr double kEps = 1e-9;
  long matches[kMaxOrder] = {0, 0, 0, 0};
  long totals[kMaxOrder] = {0, 0, 0, 0};
  long cand_len = 0, ref_len = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    cand_len += candidates[i].length();
    ref_len += references[i].length();
    for (int n = 1; n <= kMaxOrder; ++n) {
      const auto cand = ngram_counts(candidates[i], n);
      const auto ref = ngram_counts(references[i], n);
      matches[n - 1] += clipped_overlap(cand, ref);
      for (const auto& [gram, count] : cand) totals[n - 1] += count;
    }
  }
  if (cand_len == 0) throw DataError("bleu: no candidate tokens");
  if (matches[0] == 0) return 0.0;
  double log_sum = 0;
  int orders = 0;
  for (int n = 0; n < kMaxOrder; ++n) {
    if (totals[n] == 0) continue;  // every candidate shorter than this order
    const double p = matches[n] > 0
                         ? static_cast<double>(matches[n]) / static_cast<double>(totals[n])
                         : kEps / static_cast<double>(totals[n]);
    log_sum += std::log(p);
    ++orders;
  }
  const double geo = std::exp(log_sum / orders);
  const double bp = cand_len >= ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return 100.0 * bp * geo;
}

double gleu(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references) {
  if (candidates.size() != references.size())
    throw DataError("gleu: corpus sizes differ");
  if (candidates.empty()) throw DataError("gleu: empty corpus");
  constexpr int kMaxOrder = 4;
  double total = 0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    long matches = 0, cand_total = 0, ref_total = 0;
    for (int n = 1; n <= kMaxOrder; ++n) {
      const auto cand = ngram_counts(candidates[i], n);
      const auto ref = ngram_counts(references[i], n);
      matches += clipped_overlap(cand, ref);
      for (const auto& [gram, count] : cand) cand_total += count;
      for (const auto& [gram, count] : ref) ref_total += count;
    }
    if (cand_total == 0 || ref_total == 0)
      throw DataError("gleu: empty sentence in corpus");
    const double precision = static_cast<double>(matches) / static_cast<double>(cand_total);
    const double recall = static_cast<double>(matches) / static_cast<double>(ref_total);
    total += std::min(precision, recall);
  }
  return 100.0 * total / static_cast<double>(candidates.size());
}

}  // namespace styleobf
