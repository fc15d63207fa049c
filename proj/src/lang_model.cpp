#include "styleobf/lang_model.hpp"

#include <cmath>

#include "styleobf/checkpoint.hpp"

namespace styleobf {

using json = nlohmann::json;

void LMConfig::validate() const {
  if (hidden <= 0 || embed <= 0) throw ConfigError("lm: hidden and embed must be positive");
  if (dropout < 0 || dropout >= 1) throw ConfigError("lm: dropout must be in [0, 1)");
  if (lr <= 0) throw ConfigError("lm: learning rate must be positive");
  if (batch <= 0) throw ConfigError("lm: batch size must be positive");
  if (epochs <= 0) throw ConfigError("lm: epochs must be positive");
}

DomainLM::DomainLM(const Vocabulary& vocab, const LMConfig& cfg)
    : cfg_(cfg), vocab_size_(vocab.size()), vocab_hash_(vocab.hash()) {
  cfg_.validate();
  if (vocab_size_ <= Vocabulary::kNumSpecial)
    throw DataError("lm: vocabulary has no content tokens");
  const int H = cfg_.hidden, E = cfg_.embed, V = vocab_size_;
  emb_ = params_.add("emb", V, E);
  lstm_w_ = params_.add("lstm_w", 4 * H, E + H);
  lstm_b_ = params_.add("lstm_b", 4 * H, 1);
  proj_w_ = params_.add("proj_w", V, H);
  proj_b_ = params_.add("proj_b", V, 1);
  Rng init_rng = Rng(cfg_.seed).derive(0xA11);
  params_.init_uniform(init_rng, 0.08);
}

void DomainLM::forward_step_plain(int token, Vec& h, Vec& c) const {
  if (token < 0 || token >= vocab_size_) throw DataError("lm: token id out of range");
  const Vec x = params_.at(emb_).value.row(token).transpose();
  lstm_step_plain(params_.at(lstm_w_).value, params_.at(lstm_b_).value.col(0), x, h, c);
}

Vec DomainLM::output_log_probs_plain(const Vec& h) const {
  Vec logits = params_.at(proj_w_).value * h + params_.at(proj_b_).value.col(0);
  return log_softmax_plain(logits);
}

Vec DomainLM::token_log_probs(const std::vector<int>& prefix) const {
  if (prefix.empty() || prefix.front() != Vocabulary::kBos)
    throw DataError("lm: prefix must begin with BOS");
  Vec h = Vec::Zero(cfg_.hidden), c = Vec::Zero(cfg_.hidden);
  for (int token : prefix) forward_step_plain(token, h, c);
  return output_log_probs_plain(h);
}

double DomainLM::sentence_log_likelihood(const Sentence& s) const {
  if (s.ids.empty()) throw DataError("lm: empty sentence");
  Vec h = Vec::Zero(cfg_.hidden), c = Vec::Zero(cfg_.hidden);
  double ll = 0;
  int prev = Vocabulary::kBos;
  for (int token : s.ids) {
    forward_step_plain(prev, h, c);
    ll += output_log_probs_plain(h)(token);
    prev = token;
  }
  forward_step_plain(prev, h, c);
  ll += output_log_probs_plain(h)(Vocabulary::kEos);
  return ll;
}

double DomainLM::perplexity(const std::vector<Sentence>& corpus) const {
  if (corpus.empty()) throw DataError("lm: perplexity over empty corpus");
  double total_ll = 0;
  long total_tokens = 0;
  for (const auto& s : corpus) {
    total_ll += sentence_log_likelihood(s);
    total_tokens += s.length() + 1;  // EOS event
  }
  return std::exp(-total_ll / static_cast<double>(total_tokens));
}

int DomainLM::build_nll(Tape& tape, const Sentence& s, Rng* dropout_rng) const {
  if (s.ids.empty()) throw DataError("lm: empty sentence");
  LstmSpec spec{WRef::param(lstm_w_), WRef::param(lstm_b_), cfg_.hidden, cfg_.embed};
  LstmNodes st{tape.constant(Vec::Zero(cfg_.hidden)), tape.constant(Vec::Zero(cfg_.hidden))};
  std::vector<int> targets(s.ids.begin(), s.ids.end());
  targets.push_back(Vocabulary::kEos);
  std::vector<int> log_terms;
  int prev = Vocabulary::kBos;
  for (int target : targets) {
    st = lstm_step(tape, spec, tape.param_row(emb_, prev), st);
    int h = st.h;
    if (dropout_rng && cfg_.dropout > 0)
      h = tape.hadamard(h, tape.constant(dropout_mask(cfg_.hidden, cfg_.dropout, *dropout_rng)));
    const int logits = tape.add(tape.matvec(WRef::param(proj_w_), h), tape.param_vec(proj_b_));
    log_terms.push_back(tape.pick(tape.log_softmax(logits), target));
    prev = target;
  }
  return tape.scale(tape.sum(log_terms), -1.0);
}

std::vector<int> DomainLM::soft_step_log_probs(Tape& tape, const std::vector<int>& y_nodes) const {
  const Mat& emb = params_.at(emb_).value;
  const Mat& lstm_w = params_.at(lstm_w_).value;
  const Mat& lstm_b = params_.at(lstm_b_).value;
  const Mat& proj_w = params_.at(proj_w_).value;
  const Mat& proj_b = params_.at(proj_b_).value;
  LstmSpec spec{WRef::fixed(&lstm_w), WRef::fixed(&lstm_b), cfg_.hidden, cfg_.embed};
  LstmNodes st{tape.constant(Vec::Zero(cfg_.hidden)), tape.constant(Vec::Zero(cfg_.hidden))};
  std::vector<int> out;
  out.reserve(y_nodes.size() + 1);
  // BOS input, then the (possibly soft) sampled tokens
  int x = tape.constant(emb.row(Vocabulary::kBos).transpose());
  for (size_t t = 0;; ++t) {
    st = lstm_step(tape, spec, x, st);
    const int logits = tape.add(tape.matvec(WRef::fixed(&proj_w), st.h),
                                tape.constant(proj_b.col(0)));
    out.push_back(tape.log_softmax(logits));
    if (t == y_nodes.size()) break;
    x = tape.matvec_t(WRef::fixed(&emb), y_nodes[t]);
  }
  return out;
}

void DomainLM::save(const std::string& path) const {
  json header;
  header["kind"] = "lm";
  header["vocab_hash"] = to_hex(vocab_hash_);
  header["config"] = {{"hidden", cfg_.hidden},   {"embed", cfg_.embed},
                      {"dropout", cfg_.dropout}, {"lr", cfg_.lr},
                      {"grad_clip", cfg_.grad_clip}, {"batch", cfg_.batch},
                      {"epochs", cfg_.epochs},   {"seed", cfg_.seed}};
  header["epoch_losses"] = epoch_losses_;
  write_checkpoint(path, header, params_);
}

static DomainLM load_lm_from(const Checkpoint& ckpt, const Vocabulary& vocab) {
  const auto& c = ckpt.header.at("config");
  LMConfig cfg;
  cfg.hidden = c.at("hidden").get<int>();
  cfg.embed = c.at("embed").get<int>();
  cfg.dropout = c.at("dropout").get<double>();
  cfg.lr = c.at("lr").get<double>();
  cfg.grad_clip = c.at("grad_clip").get<double>();
  cfg.batch = c.at("batch").get<int>();
  cfg.epochs = c.at("epochs").get<int>();
  cfg.seed = c.at("seed").get<uint64_t>();
  DomainLM lm(vocab, cfg);
  for (auto& t : lm.params().tensors()) {
    const int src = ckpt.params.find(t.name);
    if (src < 0) throw DataError("lm checkpoint missing tensor " + t.name);
    const Tensor& s = ckpt.params.at(src);
    if (s.value.rows() != t.value.rows() || s.value.cols() != t.value.cols())
      throw DataError("lm checkpoint tensor shape mismatch for " + t.name);
    t.value = s.value;
  }
  return lm;
}

DomainLM DomainLM::load(const std::string& path, const Vocabulary& vocab) {
  Checkpoint ckpt = read_checkpoint(path);
  require_kind(ckpt, "lm");
  require_vocab(ckpt, vocab.hash());
  DomainLM lm = load_lm_from(ckpt, vocab);
  if (ckpt.header.contains("epoch_losses"))
    lm.epoch_losses_ = ckpt.header["epoch_losses"].get<std::vector<double>>();
  return lm;
}

DomainLM train_domain_lm(const std::vector<Sentence>& corpus, const Vocabulary& vocab,
                         const LMConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw DataError("lm: training corpus is empty");
  DomainLM lm(vocab, cfg);
  Adam opt(cfg.lr);
  Rng order_rng = Rng(cfg.seed).derive(0x0D0);
  Rng dropout_rng = Rng(cfg.seed).derive(0xDD0);
  std::vector<size_t> order(corpus.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  Tape tape(&lm.params_);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_nll = 0;
    long epoch_tokens = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
      lm.params_.zero_grad();
      long batch_tokens = 0;
      for (size_t i = start; i < end; ++i)
        batch_tokens += corpus[order[i]].length() + 1;
      double batch_nll = 0;
      for (size_t i = start; i < end; ++i) {
        tape.reset();
        const int nll = lm.build_nll(tape, corpus[order[i]], &dropout_rng);
        // normalize by batch token count so gradients are per-token means
        const int loss = tape.scale(nll, 1.0 / static_cast<double>(batch_tokens));
        batch_nll += tape.value_scalar(nll);
        tape.backward(loss);
      }
      if (!std::isfinite(batch_nll))
        throw TrainError("lm: non-finite loss at epoch " + std::to_string(epoch));
      lm.params_.clip_grad(cfg.grad_clip);
      opt.step(lm.params_);
      epoch_nll += batch_nll;
      epoch_tokens += batch_tokens;
    }
    lm.epoch_losses_.push_back(epoch_nll / static_cast<double>(epoch_tokens));
  }
  return lm;
}

}  // namespace styleobf
