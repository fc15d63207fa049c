#include "styleobf/obfuscator.hpp"

#include <cmath>

#include "styleobf/checkpoint.hpp"

namespace styleobf {

using json = nlohmann::json;

namespace {
constexpr double kMaskValue = -1e30;
}

StyleScoreTable style_scores(const FrequencyTable& freq) {
  StyleScoreTable table;
  table.scores = Vec::Zero(freq.vocab_size());
  for (int w = 0; w < freq.vocab_size(); ++w) {
    if (Vocabulary::is_special(w)) continue;
    const double fmax = freq.freq.col(w).maxCoeff();
    if (fmax <= 0) continue;
    const double fmin = freq.freq.col(w).minCoeff();
    table.scores(w) = (fmax - fmin) / fmax;
  }
  return table;
}

Vec deboost_logits(const Vec& logits, const StyleScoreTable& table, double gamma) {
  if (gamma < 0) throw ConfigError("deboost: gamma must be non-negative");
  if (table.scores.size() != logits.size())
    throw DataError("deboost: score table size mismatch");
  if (gamma == 0) return log_softmax_plain(logits);
  return log_softmax_plain(logits - gamma * table.scores);
}

StSample gumbel_softmax_st(const Vec& logits, double tau, Rng& rng) {
  if (tau <= 0) throw ConfigError("gumbel_softmax_st: tau must be positive");
  StSample s;
  Vec perturbed(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    perturbed(i) = logits(i) + rng.gumbel();
  Eigen::Index arg;
  perturbed.maxCoeff(&arg);
  s.index = static_cast<int>(arg);
  s.one_hot = Vec::Zero(logits.size());
  s.one_hot(arg) = 1.0;
  return s;
}

void ObfuscatorConfig::validate() const {
  if (hidden <= 0 || embed <= 0 || domain_embed <= 0)
    throw ConfigError("obfuscator: layer sizes must be positive");
  if (dropout < 0 || dropout >= 1) throw ConfigError("obfuscator: dropout must be in [0, 1)");
  if (lambda_kl < 0) throw ConfigError("obfuscator: lambda_kl must be non-negative");
  if (gumbel_tau <= 0) throw ConfigError("obfuscator: gumbel_tau must be positive");
  if (gamma < 0) throw ConfigError("obfuscator: gamma must be non-negative");
  if (lr <= 0) throw ConfigError("obfuscator: learning rate must be positive");
  if (batch <= 0 || epochs <= 0) throw ConfigError("obfuscator: batch and epochs must be positive");
}

ObfuscatorModel::ObfuscatorModel(const Vocabulary& vocab, int num_domains,
                                 const ObfuscatorConfig& cfg, PriorMode prior_mode,
                                 StyleScoreTable table)
    : cfg_(cfg), vocab_size_(vocab.size()), num_domains_(num_domains),
      vocab_hash_(vocab.hash()), prior_mode_(prior_mode), table_(std::move(table)) {
  cfg_.validate();
  if (num_domains_ < 1) throw ConfigError("obfuscator: need at least one domain");
  if (table_.scores.size() != vocab_size_)
    throw DataError("obfuscator: style table size mismatch");
  if (prior_mode_ == PriorMode::kUnion && cfg_.gamma > 0)
    throw ConfigError("obfuscator: de-boosting cannot be combined with the union prior");
  const int H = cfg_.hidden, E = cfg_.embed, D = cfg_.domain_embed, V = vocab_size_;
  emb_ = params_.add("emb", V, E);
  dom_ = params_.add("dom", num_domains_ + 1, D);
  enc_w_ = params_.add("enc_w", 4 * H, E + H);
  enc_b_ = params_.add("enc_b", 4 * H, 1);
  dec_w_ = params_.add("dec_w", 4 * H, E + D + 2 + H);
  dec_b_ = params_.add("dec_b", 4 * H, 1);
  att_w_ = params_.add("att_w", H, H);
  ctx_w_ = params_.add("ctx_w", H, 2 * H);
  proj_w_ = params_.add("proj_w", V, H);
  proj_b_ = params_.add("proj_b", V, 1);
  Rng init_rng = Rng(cfg_.seed).derive(0x0BF);
  params_.init_uniform(init_rng, 0.08);
}

std::vector<int> ObfuscatorModel::encode_nodes(Tape& tape, const std::vector<int>& x_soft,
                                               const std::vector<int>& x_hard) const {
  LstmSpec spec{WRef::param(enc_w_), WRef::param(enc_b_), cfg_.hidden, cfg_.embed};
  LstmNodes st{tape.constant(Vec::Zero(cfg_.hidden)), tape.constant(Vec::Zero(cfg_.hidden))};
  std::vector<int> states;
  const size_t n = x_soft.empty() ? x_hard.size() : x_soft.size();
  states.reserve(n);
  for (size_t t = 0; t < n; ++t) {
    const int x = x_soft.empty() ? tape.param_row(emb_, x_hard[t])
                                 : tape.matvec_t(WRef::param(emb_), x_soft[t]);
    st = lstm_step(tape, spec, x, st);
    states.push_back(st.h);
  }
  return states;
}

std::vector<Vec> ObfuscatorModel::encode_plain(const Sentence& x) const {
  if (x.ids.empty()) throw DataError("obfuscator: empty sentence");
  const int H = cfg_.hidden;
  Vec h = Vec::Zero(H), c = Vec::Zero(H);
  std::vector<Vec> states;
  states.reserve(x.ids.size());
  for (int token : x.ids) {
    if (token < 0 || token >= vocab_size_)
      throw DataError("obfuscator: token id out of range");
    const Vec xe = params_.at(emb_).value.row(token).transpose();
    lstm_step_plain(params_.at(enc_w_).value, params_.at(enc_b_).value.col(0), xe, h, c);
    states.push_back(h);
  }
  return states;
}

LatentSample ObfuscatorModel::encode_decode_latent(Tape& tape, const Sentence& x, Rng& rng,
                                                   double gamma, bool train_dropout) const {
  if (x.ids.empty()) throw DataError("obfuscator: empty sentence");
  if (gamma > 0 && prior_mode_ == PriorMode::kUnion)
    throw ConfigError("obfuscator: de-boosting cannot be combined with the union prior");
  const int H = cfg_.hidden;
  const int L = x.length();

  const auto enc_states = encode_nodes(tape, {}, x.ids);
  LstmSpec dec_spec{WRef::param(dec_w_), WRef::param(dec_b_), H, cfg_.embed + cfg_.domain_embed + 2};
  LstmNodes st{tape.max_pool(enc_states), tape.constant(Vec::Zero(H))};
  const int dom = tape.param_row(dom_, num_domains_);  // latent direction

  Vec base_mask = Vec::Zero(vocab_size_);
  base_mask(Vocabulary::kPad) = kMaskValue;
  base_mask(Vocabulary::kBos) = kMaskValue;

  LatentSample out;
  std::vector<int> log_terms;
  int prev = tape.param_row(emb_, Vocabulary::kBos);
  for (int t = 1; t <= L; ++t) {
    Vec feats(2);
    feats << static_cast<double>(t - 1) / L, static_cast<double>(L - t + 1) / L;
    const int input = tape.concat({prev, dom, tape.constant(feats)});
    st = lstm_step(tape, dec_spec, input, st);
    int readout = attention_readout(tape, WRef::param(att_w_), WRef::param(ctx_w_),
                                    enc_states, st.h);
    if (train_dropout && cfg_.dropout > 0)
      readout = tape.hadamard(readout, tape.constant(dropout_mask(H, cfg_.dropout, rng)));
    int logits = tape.add(tape.matvec(WRef::param(proj_w_), readout), tape.param_vec(proj_b_));
    if (gamma > 0)
      logits = tape.add(logits, tape.constant((-gamma * table_.scores).eval()));
    Vec mask = base_mask;
    if (t == 1) mask(Vocabulary::kEos) = kMaskValue;  // never emit an empty latent
    const int masked = tape.add(logits, tape.constant(mask));
    const int lsm = tape.log_softmax(masked);

    Vec noise(vocab_size_);
    for (int i = 0; i < vocab_size_; ++i) noise(i) = rng.gumbel();
    const int st_node = tape.st_gumbel(masked, cfg_.gumbel_tau, noise);
    log_terms.push_back(tape.dot(lsm, st_node));

    const Vec& one_hot = tape.value(st_node);
    Eigen::Index idx;
    one_hot.maxCoeff(&idx);
    if (static_cast<int>(idx) == Vocabulary::kEos) {
      out.sampled_eos = true;
      break;
    }
    out.nodes.push_back(st_node);
    out.tokens.ids.push_back(static_cast<int>(idx));
    prev = tape.matvec_t(WRef::param(emb_), st_node);
  }
  out.log_q = tape.sum(log_terms);
  return out;
}

int ObfuscatorModel::reconstruction_ll(Tape& tape, const LatentSample& y, const Sentence& x,
                                       int domain, Rng& rng, bool train_dropout) const {
  if (domain < 0 || domain >= num_domains_)
    throw DataError("obfuscator: domain index out of range");
  if (y.nodes.empty()) throw DataError("obfuscator: empty latent sample");
  const int H = cfg_.hidden;
  const int L = x.length();

  const auto enc_states = encode_nodes(tape, y.nodes, {});
  LstmSpec dec_spec{WRef::param(dec_w_), WRef::param(dec_b_), H, cfg_.embed + cfg_.domain_embed + 2};
  LstmNodes st{tape.max_pool(enc_states), tape.constant(Vec::Zero(H))};
  const int dom = tape.param_row(dom_, domain);

  std::vector<int> targets(x.ids.begin(), x.ids.end());
  targets.push_back(Vocabulary::kEos);
  std::vector<int> log_terms;
  int prev = tape.param_row(emb_, Vocabulary::kBos);
  for (size_t t = 1; t <= targets.size(); ++t) {
    Vec feats(2);
    feats << static_cast<double>(t - 1) / L, static_cast<double>(L - static_cast<int>(t) + 1) / L;
    const int input = tape.concat({prev, dom, tape.constant(feats)});
    st = lstm_step(tape, dec_spec, input, st);
    int readout = attention_readout(tape, WRef::param(att_w_), WRef::param(ctx_w_),
                                    enc_states, st.h);
    if (train_dropout && cfg_.dropout > 0)
      readout = tape.hadamard(readout, tape.constant(dropout_mask(H, cfg_.dropout, rng)));
    const int logits = tape.add(tape.matvec(WRef::param(proj_w_), readout), tape.param_vec(proj_b_));
    const int target = targets[t - 1];
    log_terms.push_back(tape.pick(tape.log_softmax(logits), target));
    if (t < targets.size()) prev = tape.param_row(emb_, target);
  }
  return tape.sum(log_terms);
}

Sentence ObfuscatorModel::greedy_decode(const std::vector<Vec>& enc_states, int domain_index,
                                        int max_len, double gamma) const {
  const int H = cfg_.hidden;
  Vec h = Vec::Constant(H, -1e30);
  for (const auto& s : enc_states) h = h.cwiseMax(s);
  Vec c = Vec::Zero(H);
  const Vec dom = params_.at(dom_).value.row(domain_index).transpose();

  Sentence out;
  Vec prev = params_.at(emb_).value.row(Vocabulary::kBos).transpose();
  for (int t = 1; t <= max_len; ++t) {
    Vec feats(2);
    feats << static_cast<double>(t - 1) / max_len, static_cast<double>(max_len - t + 1) / max_len;
    Vec input(prev.size() + dom.size() + 2);
    input << prev, dom, feats;
    lstm_step_plain(params_.at(dec_w_).value, params_.at(dec_b_).value.col(0), input, h, c);
    const Vec readout = attention_readout_plain(params_.at(att_w_).value,
                                                params_.at(ctx_w_).value, enc_states, h);
    Vec logits = params_.at(proj_w_).value * readout + params_.at(proj_b_).value.col(0);
    if (gamma > 0) logits -= gamma * table_.scores;
    logits(Vocabulary::kPad) = kMaskValue;
    logits(Vocabulary::kBos) = kMaskValue;
    if (t == 1) logits(Vocabulary::kEos) = kMaskValue;
    Eigen::Index arg;
    logits.maxCoeff(&arg);
    if (static_cast<int>(arg) == Vocabulary::kEos) break;
    out.ids.push_back(static_cast<int>(arg));
    prev = params_.at(emb_).value.row(arg).transpose();
  }
  return out;
}

Sentence ObfuscatorModel::obfuscate(const Sentence& x, double gamma) const {
  const double g = gamma < 0 ? cfg_.gamma : gamma;
  if (g > 0 && prior_mode_ == PriorMode::kUnion)
    throw ConfigError("obfuscator: de-boosting cannot be combined with the union prior");
  return greedy_decode(encode_plain(x), num_domains_, x.length(), g);
}

Sentence ObfuscatorModel::back_translate(const Sentence& y, int domain) const {
  if (domain < 0 || domain >= num_domains_)
    throw DataError("obfuscator: domain index out of range");
  return greedy_decode(encode_plain(y), domain, y.length(), 0.0);
}

void ObfuscatorModel::save(const std::string& path) const {
  json header;
  header["kind"] = "obfuscator";
  header["vocab_hash"] = to_hex(vocab_hash_);
  header["num_domains"] = num_domains_;
  header["prior_mode"] = prior_mode_to_string(prior_mode_);
  header["steps"] = steps_;
  header["config"] = {{"hidden", cfg_.hidden},
                      {"embed", cfg_.embed},
                      {"domain_embed", cfg_.domain_embed},
                      {"dropout", cfg_.dropout},
                      {"lambda_kl", cfg_.lambda_kl},
                      {"gumbel_tau", cfg_.gumbel_tau},
                      {"gamma", cfg_.gamma},
                      {"lr", cfg_.lr},
                      {"grad_clip", cfg_.grad_clip},
                      {"batch", cfg_.batch},
                      {"epochs", cfg_.epochs},
                      {"seed", cfg_.seed}};
  std::vector<double> scores(table_.scores.data(), table_.scores.data() + table_.scores.size());
  header["style_scores"] = std::move(scores);
  write_checkpoint(path, header, params_);
}

ObfuscatorModel ObfuscatorModel::load(const std::string& path, const Vocabulary& vocab) {
  Checkpoint ckpt = read_checkpoint(path);
  require_kind(ckpt, "obfuscator");
  require_vocab(ckpt, vocab.hash());
  const auto& c = ckpt.header.at("config");
  ObfuscatorConfig cfg;
  cfg.hidden = c.at("hidden").get<int>();
  cfg.embed = c.at("embed").get<int>();
  cfg.domain_embed = c.at("domain_embed").get<int>();
  cfg.dropout = c.at("dropout").get<double>();
  cfg.lambda_kl = c.at("lambda_kl").get<double>();
  cfg.gumbel_tau = c.at("gumbel_tau").get<double>();
  cfg.gamma = c.at("gamma").get<double>();
  cfg.lr = c.at("lr").get<double>();
  cfg.grad_clip = c.at("grad_clip").get<double>();
  cfg.batch = c.at("batch").get<int>();
  cfg.epochs = c.at("epochs").get<int>();
  cfg.seed = c.at("seed").get<uint64_t>();
  StyleScoreTable table;
  const auto scores = ckpt.header.at("style_scores").get<std::vector<double>>();
  if (static_cast<int>(scores.size()) != vocab.size())
    throw DataError("obfuscator checkpoint style table size mismatch");
  table.scores = Eigen::Map<const Vec>(scores.data(), static_cast<Eigen::Index>(scores.size()));
  ObfuscatorModel model(vocab, ckpt.header.at("num_domains").get<int>(), cfg,
                        prior_mode_from_string(ckpt.header.at("prior_mode").get<std::string>()),
                        std::move(table));
  for (auto& t : model.params_.tensors()) {
    const int src = ckpt.params.find(t.name);
    if (src < 0) throw DataError("obfuscator checkpoint missing tensor " + t.name);
    const Tensor& s = ckpt.params.at(src);
    if (s.value.rows() != t.value.rows() || s.value.cols() != t.value.cols())
      throw DataError("obfuscator checkpoint tensor shape mismatch for " + t.name);
    t.value = s.value;
  }
  model.steps_ = ckpt.header.value("steps", 0L);
  return model;
}

struct ObfTrainer {
  static ObfTrainResult run(const MultiDomainDataset& ds, const PriorPool& prior,
                            const ObfuscatorConfig& cfg, const StyleScoreTable* table,
                            const EpochCallback& on_epoch) {
    cfg.validate();
    ds.validate();
    if (prior.vocab_hash() != ds.vocab.hash())
      throw DataError("obfuscator: prior models use a different vocabulary");
    if (prior.mode() == PriorMode::kUnion && cfg.gamma > 0)
      throw ConfigError("obfuscator: de-boosting cannot be combined with the union prior");

    StyleScoreTable tbl = table ? *table : style_scores(domain_frequencies(ds));
    ObfTrainResult result{ObfuscatorModel(ds.vocab, ds.num_domains, cfg, prior.mode(), tbl), {}};
    ObfuscatorModel& model = result.model;

    // flat sentence list with stable per-sentence ids
    std::vector<std::pair<int, size_t>> items;
    for (int j = 0; j < ds.num_domains; ++j)
      for (size_t i = 0; i < ds.train[static_cast<size_t>(j)].size(); ++i)
        items.emplace_back(j, i);

    Adam opt(cfg.lr);
    Rng order_rng = Rng(cfg.seed).derive(0x0D2);
    Tape tape(&model.params_);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      order_rng.shuffle(items);
      EpochStats stats;
      long count = 0;
      for (size_t start = 0; start < items.size(); start += static_cast<size_t>(cfg.batch)) {
        const size_t end = std::min(items.size(), start + static_cast<size_t>(cfg.batch));
        model.params_.zero_grad();
        double batch_loss = 0;
        for (size_t i = start; i < end; ++i) {
          const auto [dom, idx] = items[i];
          const Sentence& x = ds.train[static_cast<size_t>(dom)][idx];
          const uint64_t sid = static_cast<uint64_t>(dom) * 1000003ull + idx;
          Rng srng(mix64(mix64(cfg.seed ^ 0x0BF5EEDull, static_cast<uint64_t>(epoch)), sid));

          tape.reset();
          LatentSample lat = model.encode_decode_latent(tape, x, srng, cfg.gamma, true);
          const int recon = model.reconstruction_ll(tape, lat, x, dom, srng, true);
          const int prior_node = prior.build_score(tape, lat.nodes, lat.tokens.ids);
          const int kl = tape.axpby(1.0, lat.log_q, -1.0, prior_node);
          const int neg_elbo = tape.axpby(-1.0, recon, cfg.lambda_kl, kl);
          const int loss = tape.scale(neg_elbo, 1.0 / static_cast<double>(end - start));
          tape.backward(loss);

          stats.recon_nll += -tape.value_scalar(recon);
          stats.kl += tape.value_scalar(kl);
          stats.loss += tape.value_scalar(neg_elbo);
          batch_loss += tape.value_scalar(neg_elbo);
          ++count;
        }
        if (!std::isfinite(batch_loss))
          throw TrainError("obfuscator: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch starting " + std::to_string(start));
        model.params_.clip_grad(cfg.grad_clip);
        opt.step(model.params_);
      }
      stats.recon_nll /= static_cast<double>(count);
      stats.kl /= static_cast<double>(count);
      stats.loss /= static_cast<double>(count);
      result.epochs.push_back(stats);
      model.steps_ = opt.steps_taken();
      if (!cfg.checkpoint_dir.empty()) {
        ensure_dir(cfg.checkpoint_dir);
        model.save(cfg.checkpoint_dir + "/obf.epoch" + std::to_string(epoch) + ".ckpt");
      }
      if (on_epoch) on_epoch(epoch, stats);
    }
    return result;
  }
};

ObfTrainResult train_obfuscator(const MultiDomainDataset& ds, const PriorPool& prior,
                                const ObfuscatorConfig& cfg, const StyleScoreTable* table,
                                const EpochCallback& on_epoch) {
  return ObfTrainer::run(ds, prior, cfg, table, on_epoch);
}

}  // namespace styleobf
