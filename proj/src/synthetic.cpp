#include "styleobf/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <json.hpp>

namespace styleobf {

namespace {

using json = nlohmann::json;

struct SlotDef {
  const char* name;
  std::vector<const char*> words;
};

const std::vector<SlotDef>& slot_table() {
  static const std::vector<SlotDef> slots = {
      {"ADJ", {"delicious", "tasty", "friendly", "cozy", "slow", "fresh", "amazing",
               "awful", "decent", "bland", "spicy", "warm", "cold", "clean", "noisy",
               "fancy", "cheap", "stale", "crisp", "rude", "salty", "sweet", "tender",
               "dry", "juicy", "greasy", "crowded", "quiet", "lovely", "plain"}},
      {"NOUN", {"burger", "pasta", "salad", "pizza", "steak", "soup", "dessert",
                "coffee", "sandwich", "tacos", "noodles", "curry", "bread", "cake",
                "wings", "sushi", "ramen", "pie", "fries", "tea", "rice", "toast",
                "waffles", "pancakes", "dumplings", "kebab", "falafel", "chili",
                "omelet", "stew"}},
      {"PLACE", {"spot", "diner", "cafe", "bistro", "joint", "bakery", "restaurant",
                 "bar", "buffet", "grill", "eatery", "kitchen", "pub", "deli",
                 "steakhouse"}},
      {"ADV", {"really", "quite", "super", "pretty", "fairly", "truly", "rather",
               "extremely"}},
      {"PERSON", {"friend", "sister", "brother", "cousin", "coworker", "neighbor",
                  "roommate", "uncle"}},
      {"TIME", {"monday", "tuesday", "friday", "saturday", "sunday", "evening",
                "morning", "noon", "midnight", "weekend"}},
      {"EAT", {"tried", "ordered", "shared", "grabbed", "enjoyed", "tasted",
               "sampled", "finished"}},
      {"GO", {"went", "walked", "drove", "returned", "rushed", "hopped", "strolled",
              "biked"}},
      {"SRV", {"serves", "offers", "makes", "delivers", "plates", "brings"}},
      {"OPEN", {"honestly", "frankly", "overall", "anyway", "somehow", "apparently",
                "luckily", "sadly"}},
      {"BE", {"be", "get", "have", "see", "find", "take"}},
      {"OBJ", {"me", "us", "him", "her", "them", "everyone"}},
      {"SEEM", {"seemed", "felt", "looked", "turned", "stayed", "got"}},
      {"FAIR", {"fair", "honest", "blunt", "frank", "real", "exact"}},
      {"LOTQ", {"lot", "ton", "bunch", "pile", "plate", "bowl"}},
      {"NEARP", {"near", "beside", "behind", "opposite"}},
      {"TIMEP", {"around", "during", "about", "past", "before"}},
  };
  return slots;
}

// Weighted review sentence templates. The weights are balanced so the
// expected global frequency ranking keeps a fixed 20-word head with >=9%
// pairwise margins; see the frequency-ranking unit test.
const std::vector<std::pair<int, const char*>>& template_table() {
  static const std::vector<std::pair<int, const char*>> templates = {
      {20, "the food was great and the NOUN was ADJ"},
      {18, "great NOUN and a great NOUN was the ADJ NOUN"},
      {16, "i EAT this place and it was ADJ"},
      {16, "this NOUN was ADJ and this NOUN was ADV ADJ"},
      {14, "it was great to EAT the ADJ food"},
      {14, "the NOUN of this PLACE was ADV ADJ"},
      {14, "OPEN this place SRV great food to OBJ"},
      {12, "i GO to the PLACE for a NOUN"},
      {12, "it was a great TIME and it SEEM ADJ"},
      {12, "my PERSON and i EAT the ADJ NOUN"},
      {12, "to BE FAIR it was a ADJ NOUN to OBJ"},
      {12, "ADJ NOUN and a LOTQ of great food for OBJ"},
      {8, "this is it the good NOUN of the PLACE"},
      {10, "i GO to this PLACE NEARP the NOUN TIMEP TIME"},
      {10, "the place was ADJ and the NOUN was ADJ"},
      {10, "good food good NOUN and good service"},
      {8, "it was ADJ and the NOUN was ADV great"},
      {8, "they SRV a NOUN of ADJ NOUN quickly"},
      {8, "for a ADJ PLACE the service was ADJ"},
      {8, "they are ADV ADJ in the TIME rush"},
      {8, "very ADJ NOUN and very ADJ service"},
      {6, "OPEN the service of the place was ADV ADJ in there"},
      {6, "are they open on TIME for NOUN"},
      {6, "a ADJ NOUN in the place they say"},
      {6, "i stood by the door for a NOUN of ADJ NOUN all TIME"},
      {6, "this PLACE was the pick of the TIME"},
      {10, "the NOUN and the NOUN are ADV ADJ"},
      {3, "it was great to OBJ"},
      {2, "it was my ADJ NOUN"},
      {3, "good service for the ADJ NOUN"},
      {2, "they are in the ADJ PLACE"},
      {2, "very ADJ and ADV good"},
      {2, "my NOUN was ADV ADJ"},
      {1, "are they in the PLACE"},
  };
  return templates;
}

const SlotDef* find_slot(const std::string& name) {
  for (const auto& s : slot_table())
    if (name == s.name) return &s;
  return nullptr;
}

constexpr uint64_t kSaltWordChoice = 11;
constexpr uint64_t kSaltShuffle = 22;
constexpr uint64_t kSaltBaseCorpus = 33;

}  // namespace

std::vector<std::string> generate_review_corpus(long n, Rng& rng) {
  if (n <= 0) throw ConfigError("generate_review_corpus: n must be positive");
  const auto& templates = template_table();
  int total_weight = 0;
  for (const auto& [w, _] : templates) total_weight += w;
  std::vector<std::string> lines;
  lines.reserve(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    int draw = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(total_weight)));
    size_t ti = 0;
    while (draw >= templates[ti].first) {
      draw -= templates[ti].first;
      ++ti;
    }
    std::string line;
    for (const auto& tok : split_whitespace(templates[ti].second)) {
      if (!line.empty()) line += ' ';
      if (const SlotDef* slot = find_slot(tok)) {
        line += slot->words[rng.uniform_int(slot->words.size())];
      } else {
        line += tok;
      }
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<std::string> top_frequency_words(const std::vector<std::string>& lines, int k) {
  std::map<std::string, long> counts;
  for (const auto& line : lines)
    for (const auto& tok : split_whitespace(line)) ++counts[tok];
  std::vector<std::pair<std::string, long>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (int i = 0; i < k && i < static_cast<int>(items.size()); ++i)
    out.push_back(items[static_cast<size_t>(i)].first);
  return out;
}

std::string CorruptionSpec::marker(int domain, const std::string& word) const {
  if (domain < 0 || domain >= num_domains())
    throw DataError("marker: domain index out of range");
  const char d = static_cast<char>('0' + domain);
  return std::string{d, d} + word + std::string{d, d};
}

bool CorruptionSpec::is_marker(const std::string& token, int* domain,
                               std::string* base) const {
  if (token.size() < 5) return false;
  const char d = token[0];
  if (!std::isdigit(static_cast<unsigned char>(d))) return false;
  if (token[1] != d) return false;
  const size_t n = token.size();
  if (token[n - 1] != d || token[n - 2] != d) return false;
  const int dom = d - '0';
  if (dom >= num_domains()) return false;
  const std::string mid = token.substr(2, n - 4);
  if (std::find(words[static_cast<size_t>(dom)].begin(), words[static_cast<size_t>(dom)].end(), mid) ==
      words[static_cast<size_t>(dom)].end())
    return false;
  if (domain) *domain = dom;
  if (base) *base = mid;
  return true;
}

void CorruptionSpec::save(const std::string& path) const {
  json j;
  j["domains"] = words;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corruption spec: " + path);
  out << j.dump(2) << "\n";
}

CorruptionSpec CorruptionSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read corruption spec: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed corruption spec " + path + ": " + e.what());
  }
  CorruptionSpec spec;
  if (!j.contains("domains") || !j["domains"].is_array())
    throw DataError("corruption spec missing 'domains' array: " + path);
  spec.words = j["domains"].get<std::vector<std::vector<std::string>>>();
  if (spec.words.empty()) throw DataError("corruption spec has no domains: " + path);
  return spec;
}

void SyntheticConfig::validate() const {
  if (train_size <= 0 || test_size <= 0)
    throw ConfigError("synthetic: train_size and test_size must be positive");
  if (num_domains < 2) throw ConfigError("synthetic: need at least 2 domains");
  if (num_domains > 10) throw ConfigError("synthetic: marker scheme supports at most 10 domains");
  if (words_per_domain < 1) throw ConfigError("synthetic: words_per_domain must be >= 1");
  if (top_k < num_domains * words_per_domain)
    throw ConfigError("synthetic: top_k must cover num_domains * words_per_domain words");
  if (min_count < 1) throw ConfigError("synthetic: min_count must be >= 1");
}

SyntheticBuild build_synthetic_domains(const std::vector<std::string>& base_lines,
                                       const SyntheticConfig& cfg) {
  cfg.validate();
  const int M = cfg.num_domains;
  const long need = cfg.train_size + cfg.test_size;
  if (static_cast<long>(base_lines.size()) < need)
    throw DataError("synthetic: base corpus smaller than train_size + test_size");

  // word counts over the whole base corpus
  std::map<std::string, long> counts;
  for (const auto& line : base_lines)
    for (const auto& tok : split_whitespace(line)) ++counts[tok];
  const int n_chosen = M * cfg.words_per_domain;
  std::vector<std::string> top = top_frequency_words(base_lines, cfg.top_k);
  if (static_cast<int>(top.size()) < cfg.top_k)
    throw DataError("synthetic: base corpus has fewer than top_k distinct words");

  Rng root(cfg.seed);
  Rng rng_choice = root.derive(kSaltWordChoice);
  Rng rng_split = root.derive(kSaltShuffle);

  std::vector<std::string> pool = top;
  rng_choice.shuffle(pool);
  std::vector<std::string> chosen(pool.begin(), pool.begin() + n_chosen);
  // frequency-descending blocks: most frequent block goes to domain 0
  std::sort(chosen.begin(), chosen.end(), [&](const std::string& a, const std::string& b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return a < b;
  });
  CorruptionSpec spec;
  spec.words.resize(static_cast<size_t>(M));
  for (int j = 0; j < M; ++j)
    spec.words[static_cast<size_t>(j)].assign(
        chosen.begin() + j * cfg.words_per_domain,
        chosen.begin() + (j + 1) * cfg.words_per_domain);

  // shuffle and slice the corpus into per-domain train/test groups
  std::vector<size_t> order(base_lines.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng_split.shuffle(order);
  const long per_train = cfg.train_size / M;
  const long per_test = cfg.test_size / M;
  if (per_train == 0 || per_test == 0)
    throw ConfigError("synthetic: split sizes too small for num_domains");

  auto corrupt_line = [&](const std::string& line, int j) {
    const auto& wj = spec.words[static_cast<size_t>(j)];
    std::string out;
    for (const auto& tok : split_whitespace(line)) {
      if (!out.empty()) out += ' ';
      if (std::find(wj.begin(), wj.end(), tok) != wj.end())
        out += spec.marker(j, tok);
      else
        out += tok;
    }
    return out;
  };

  std::vector<std::vector<std::string>> train_raw(static_cast<size_t>(M)),
      test_raw(static_cast<size_t>(M)), train_ref_raw(static_cast<size_t>(M)),
      test_ref_raw(static_cast<size_t>(M));
  long cursor = 0;
  for (int j = 0; j < M; ++j) {
    for (long i = 0; i < per_train; ++i, ++cursor) {
      const std::string& line = base_lines[order[static_cast<size_t>(cursor)]];
      train_ref_raw[static_cast<size_t>(j)].push_back(line);
      train_raw[static_cast<size_t>(j)].push_back(corrupt_line(line, j));
    }
  }
  for (int j = 0; j < M; ++j) {
    for (long i = 0; i < per_test; ++i, ++cursor) {
      const std::string& line = base_lines[order[static_cast<size_t>(cursor)]];
      test_ref_raw[static_cast<size_t>(j)].push_back(line);
      test_raw[static_cast<size_t>(j)].push_back(corrupt_line(line, j));
    }
  }

  SyntheticBuild build;
  build.corruption = spec;
  build.dataset.num_domains = M;
  build.dataset.vocab = build_vocabulary(train_raw, cfg.min_count);
  for (int j = 0; j < M; ++j) {
    const auto sj = static_cast<size_t>(j);
    build.dataset.train.push_back(tokenize_lines(build.dataset.vocab, train_raw[sj]));
    build.dataset.test.push_back(tokenize_lines(build.dataset.vocab, test_raw[sj]));
    build.train_refs.push_back(tokenize_lines(build.dataset.vocab, train_ref_raw[sj]));
    build.test_refs.push_back(tokenize_lines(build.dataset.vocab, test_ref_raw[sj]));
  }
  build.dataset.validate();
  return build;
}

SyntheticBuild make_synthetic_build(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng base_rng = Rng(cfg.seed).derive(kSaltBaseCorpus);
  const auto lines = generate_review_corpus(cfg.train_size + cfg.test_size, base_rng);
  return build_synthetic_domains(lines, cfg);
}

void save_synthetic_build(const SyntheticBuild& build, const std::string& dir) {
  save_dataset(build.dataset, dir);
  build.corruption.save(dir + "/corruption.json");
  for (int j = 0; j < build.dataset.num_domains; ++j) {
    const auto sj = static_cast<size_t>(j);
    write_lines(dir + "/train.ref." + std::to_string(j) + ".txt",
                detokenize_all(build.dataset.vocab, build.train_refs[sj]));
    write_lines(dir + "/test.ref." + std::to_string(j) + ".txt",
                detokenize_all(build.dataset.vocab, build.test_refs[sj]));
  }
}

SyntheticBuild load_synthetic_build(const std::string& dir) {
  SyntheticBuild build;
  build.dataset = load_dataset(dir);
  build.corruption = CorruptionSpec::load(dir + "/corruption.json");
  if (build.corruption.num_domains() != build.dataset.num_domains)
    throw DataError("corruption spec domain count does not match dataset: " + dir);
  for (int j = 0; j < build.dataset.num_domains; ++j) {
    const std::string tr = dir + "/train.ref." + std::to_string(j) + ".txt";
    const std::string te = dir + "/test.ref." + std::to_string(j) + ".txt";
    if (!file_exists(tr) || !file_exists(te))
      throw DataError("missing reference split files in " + dir);
    build.train_refs.push_back(tokenize_lines(build.dataset.vocab, read_lines(tr)));
    build.test_refs.push_back(tokenize_lines(build.dataset.vocab, read_lines(te)));
  }
  return build;
}

CorruptionStats corruption_stats(const std::vector<std::vector<Sentence>>& originals,
                                 const std::vector<std::vector<Sentence>>& outputs,
                                 const Vocabulary& vocab, const CorruptionSpec& spec) {
  const int M = spec.num_domains();
  if (static_cast<int>(originals.size()) != M || static_cast<int>(outputs.size()) != M)
    throw DataError("corruption_stats: domain count mismatch");

  // per-token classification tables
  const int V = vocab.size();
  std::vector<int> marker_domain(static_cast<size_t>(V), -1);
  std::vector<int> marker_base(static_cast<size_t>(V), -1);
  std::vector<int> base_domain(static_cast<size_t>(V), -1);
  std::vector<int> base_marker(static_cast<size_t>(V), -1);
  for (int j = 0; j < M; ++j) {
    for (const auto& w : spec.words[static_cast<size_t>(j)]) {
      if (!vocab.contains(w)) continue;
      const int base_id = vocab.id(w);
      base_domain[static_cast<size_t>(base_id)] = j;
      const std::string m = spec.marker(j, w);
      if (vocab.contains(m)) {
        const int m_id = vocab.id(m);
        marker_domain[static_cast<size_t>(m_id)] = j;
        marker_base[static_cast<size_t>(m_id)] = base_id;
        base_marker[static_cast<size_t>(base_id)] = m_id;
      }
    }
  }

  CorruptionStats stats;
  int domains_with_markers = 0, domains_with_bases = 0;
  for (int j = 0; j < M; ++j) {
    const auto& orig = originals[static_cast<size_t>(j)];
    const auto& out = outputs[static_cast<size_t>(j)];
    if (orig.size() != out.size())
      throw DataError("corruption_stats: sentence count mismatch in domain " + std::to_string(j));
    long corrected = 0, remaining = 0, removed = 0, markers = 0;
    long spread = 0, bases = 0;
    for (size_t i = 0; i < orig.size(); ++i) {
      const auto& o = orig[i].ids;
      const auto& y = out[i].ids;
      std::vector<char> used(y.size(), 0);
      auto consume = [&](int want) {
        for (size_t t = 0; t < y.size(); ++t) {
          if (!used[t] && y[t] == want) {
            used[t] = 1;
            return true;
          }
        }
        return false;
      };
      for (int tok : o) {
        const auto st = static_cast<size_t>(tok);
        if (marker_domain[st] == j) {
          ++markers;
          if (consume(tok))
            ++remaining;
          else if (consume(marker_base[st]))
            ++corrected;
          else
            ++removed;
        } else if (base_domain[st] >= 0 && base_domain[st] != j) {
          ++bases;
          if (base_marker[st] >= 0 && consume(base_marker[st])) ++spread;
        }
      }
    }
    if (markers > 0) {
      ++domains_with_markers;
      stats.corrected += 100.0 * static_cast<double>(corrected) / static_cast<double>(markers);
      stats.remaining += 100.0 * static_cast<double>(remaining) / static_cast<double>(markers);
      stats.removed += 100.0 * static_cast<double>(removed) / static_cast<double>(markers);
    }
    if (bases > 0) {
      ++domains_with_bases;
      stats.spread += 100.0 * static_cast<double>(spread) / static_cast<double>(bases);
    }
  }
  if (domains_with_markers == 0)
    throw DataError("corruption_stats: no marker occurrences in any domain");
  stats.corrected /= domains_with_markers;
  stats.remaining /= domains_with_markers;
  stats.removed /= domains_with_markers;
  if (domains_with_bases > 0) stats.spread /= domains_with_bases;
  return stats;
}

}  // namespace styleobf
