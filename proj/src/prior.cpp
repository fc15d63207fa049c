#include "styleobf/prior.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

namespace styleobf {

using json = nlohmann::json;

PriorMode prior_mode_from_string(const std::string& s) {
  if (s == "intersection") return PriorMode::kIntersection;
  if (s == "union") return PriorMode::kUnion;
  if (s == "single") return PriorMode::kSingle;
  throw ConfigError("unknown prior mode: " + s);
}

std::string prior_mode_to_string(PriorMode mode) {
  switch (mode) {
    case PriorMode::kIntersection: return "intersection";
    case PriorMode::kUnion: return "union";
    case PriorMode::kSingle: return "single";
  }
  throw ConfigError("invalid prior mode value");
}

PriorPool::PriorPool(PriorMode mode, std::vector<std::shared_ptr<const DomainLM>> members)
    : mode_(mode), members_(std::move(members)) {
  if (members_.empty()) throw ConfigError("prior: needs at least one member model");
  if (mode_ == PriorMode::kSingle && members_.size() != 1)
    throw ConfigError("prior: single mode carries exactly one member model");
  for (const auto& m : members_) {
    if (!m) throw ConfigError("prior: null member model");
    if (m->vocab_hash() != members_.front()->vocab_hash())
      throw DataError("prior: member models trained on different vocabularies");
  }
}

double PriorPool::log_score(const Sentence& y) const {
  if (y.ids.empty()) throw DataError("prior: empty sentence");
  switch (mode_) {
    case PriorMode::kSingle:
      return members_.front()->sentence_log_likelihood(y);
    case PriorMode::kIntersection: {
      std::vector<double> lls;
      lls.reserve(members_.size());
      for (const auto& m : members_) lls.push_back(m->sentence_log_likelihood(y));
      return logsumexp_plain(lls) - std::log(static_cast<double>(members_.size()));
    }
    case PriorMode::kUnion: {
      double score = 0;
      std::vector<int> prefix{Vocabulary::kBos};
      std::vector<int> targets(y.ids.begin(), y.ids.end());
      targets.push_back(Vocabulary::kEos);
      for (int target : targets) {
        double step = std::numeric_limits<double>::infinity();
        for (const auto& m : members_)
          step = std::min(step, m->token_log_probs(prefix)(target));
        score += step;
        prefix.push_back(target);
      }
      return score;
    }
  }
  throw ConfigError("invalid prior mode value");
}

Vec PriorPool::token_log_scores(const std::vector<int>& prefix) const {
  switch (mode_) {
    case PriorMode::kSingle:
      return members_.front()->token_log_probs(prefix);
    case PriorMode::kIntersection: {
      // utterance-level mixture has no exact per-step factorization; use the
      // mixture of next-token distributions given the shared prefix
      Vec acc = Vec::Zero(members_.front()->vocab_size());
      Mat stacked(static_cast<Eigen::Index>(members_.size()), members_.front()->vocab_size());
      for (size_t j = 0; j < members_.size(); ++j)
        stacked.row(static_cast<Eigen::Index>(j)) = members_[j]->token_log_probs(prefix).transpose();
      for (int w = 0; w < acc.size(); ++w) {
        std::vector<double> col;
        col.reserve(members_.size());
        for (size_t j = 0; j < members_.size(); ++j)
          col.push_back(stacked(static_cast<Eigen::Index>(j), w));
        acc(w) = logsumexp_plain(col) - std::log(static_cast<double>(members_.size()));
      }
      return acc;
    }
    case PriorMode::kUnion: {
      Vec acc = members_.front()->token_log_probs(prefix);
      for (size_t j = 1; j < members_.size(); ++j)
        acc = acc.cwiseMin(members_[j]->token_log_probs(prefix));
      return acc;
    }
  }
  throw ConfigError("invalid prior mode value");
}

int PriorPool::build_score(Tape& tape, const std::vector<int>& y_nodes,
                           const std::vector<int>& y_hard) const {
  if (y_nodes.empty()) throw DataError("prior: empty latent sample");
  if (y_nodes.size() != y_hard.size())
    throw DataError("prior: node/token count mismatch");

  // per-member, per-step log-prob scalar nodes (content tokens, then EOS)
  std::vector<std::vector<int>> member_terms(members_.size());
  for (size_t j = 0; j < members_.size(); ++j) {
    const auto lsm = members_[j]->soft_step_log_probs(tape, y_nodes);
    auto& terms = member_terms[j];
    terms.reserve(y_hard.size() + 1);
    for (size_t t = 0; t < y_hard.size(); ++t)
      terms.push_back(tape.dot(lsm[t], y_nodes[t]));
    terms.push_back(tape.pick(lsm[y_hard.size()], Vocabulary::kEos));
  }

  switch (mode_) {
    case PriorMode::kSingle:
      return tape.sum(member_terms.front());
    case PriorMode::kIntersection: {
      std::vector<int> lls;
      lls.reserve(members_.size());
      for (const auto& terms : member_terms) lls.push_back(tape.sum(terms));
      const int lse = tape.logsumexp(lls);
      return tape.add(lse, tape.scalar_constant(-std::log(static_cast<double>(members_.size()))));
    }
    case PriorMode::kUnion: {
      std::vector<int> steps;
      const size_t n_steps = y_hard.size() + 1;
      steps.reserve(n_steps);
      for (size_t t = 0; t < n_steps; ++t) {
        std::vector<int> per_member;
        per_member.reserve(members_.size());
        for (const auto& terms : member_terms) per_member.push_back(terms[t]);
        steps.push_back(tape.min_of(per_member));
      }
      return tape.sum(steps);
    }
  }
  throw ConfigError("invalid prior mode value");
}

void save_prior_descriptor(const std::string& path, PriorMode mode,
                           const std::vector<std::string>& member_paths) {
  if (member_paths.empty()) throw ConfigError("prior descriptor: no member paths");
  json j;
  j["mode"] = prior_mode_to_string(mode);
  j["members"] = member_paths;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write prior descriptor: " + path);
  out << j.dump(2) << "\n";
}

PriorPool load_prior_from_descriptor(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read prior descriptor: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed prior descriptor " + path + ": " + e.what());
  }
  if (!j.contains("mode") || !j.contains("members"))
    throw DataError("prior descriptor missing fields: " + path);
  const PriorMode mode = prior_mode_from_string(j["mode"].get<std::string>());
  std::vector<std::shared_ptr<const DomainLM>> members;
  for (const auto& p : j["members"])
    members.push_back(std::make_shared<DomainLM>(
        DomainLM::load(p.get<std::string>(), vocab)));
  return PriorPool(mode, std::move(members));
}

DomainLM train_reference_lm(const std::vector<std::vector<Sentence>>& refs,
                            const Vocabulary& vocab, const LMConfig& cfg) {
  std::vector<Sentence> all;
  for (const auto& d : refs) all.insert(all.end(), d.begin(), d.end());
  if (all.empty()) throw DataError("reference lm: no sentences");
  return train_domain_lm(all, vocab, cfg);
}

DomainLM train_misclassified_lm(const MultiDomainDataset& ds, const TextClassifier& clf,
                                const LMConfig& cfg, long min_sentences) {
  if (clf.vocab_hash() != ds.vocab.hash())
    throw DataError("misclassified lm: classifier vocabulary mismatch");
  std::vector<Sentence> misclassified;
  for (int j = 0; j < ds.num_domains; ++j)
    for (const auto& s : ds.train[static_cast<size_t>(j)])
      if (clf.predict(s) != j) misclassified.push_back(s);
  if (static_cast<long>(misclassified.size()) < min_sentences)
    throw DataError("misclassified lm: only " + std::to_string(misclassified.size()) +
                    " sentences misclassified, need " + std::to_string(min_sentences));
  return train_domain_lm(misclassified, ds.vocab, cfg);
}

}  // namespace styleobf
