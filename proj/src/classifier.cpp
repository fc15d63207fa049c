#include "styleobf/classifier.hpp"

#include <cmath>
#include <set>

#include "styleobf/checkpoint.hpp"

namespace styleobf {

using json = nlohmann::json;

void ClassifierConfig::validate() const {
  if (hidden <= 0 || embed <= 0) throw ConfigError("classifier: hidden and embed must be positive");
  if (dropout < 0 || dropout >= 1) throw ConfigError("classifier: dropout must be in [0, 1)");
  if (lr <= 0) throw ConfigError("classifier: learning rate must be positive");
  if (batch <= 0 || epochs <= 0) throw ConfigError("classifier: batch and epochs must be positive");
}

TextClassifier::TextClassifier(const Vocabulary& vocab, int num_classes,
                               const ClassifierConfig& cfg)
    : cfg_(cfg), vocab_size_(vocab.size()), num_classes_(num_classes),
      vocab_hash_(vocab.hash()) {
  cfg_.validate();
  if (num_classes_ < 2) throw ConfigError("classifier: need at least 2 classes");
  const int H = cfg_.hidden, E = cfg_.embed;
  emb_ = params_.add("emb", vocab_size_, E);
  lstm_w_ = params_.add("lstm_w", 4 * H, E + H);
  lstm_b_ = params_.add("lstm_b", 4 * H, 1);
  out_w_ = params_.add("out_w", num_classes_, H);
  out_b_ = params_.add("out_b", num_classes_, 1);
  Rng init_rng = Rng(cfg_.seed).derive(0xC15);
  params_.init_uniform(init_rng, 0.08);
}

Vec TextClassifier::class_probs(const Sentence& s) const {
  if (s.ids.empty()) throw DataError("classifier: empty sentence");
  const int H = cfg_.hidden;
  Vec h = Vec::Zero(H), c = Vec::Zero(H);
  Vec pooled = Vec::Constant(H, -1e30);
  for (int token : s.ids) {
    if (token < 0 || token >= vocab_size_) throw DataError("classifier: token id out of range");
    const Vec x = params_.at(emb_).value.row(token).transpose();
    lstm_step_plain(params_.at(lstm_w_).value, params_.at(lstm_b_).value.col(0), x, h, c);
    pooled = pooled.cwiseMax(h);
  }
  Vec logits = params_.at(out_w_).value * pooled + params_.at(out_b_).value.col(0);
  return softmax_plain(logits);
}

int TextClassifier::predict(const Sentence& s) const {
  Eigen::Index arg;
  class_probs(s).maxCoeff(&arg);
  return static_cast<int>(arg);
}

double TextClassifier::accuracy(const std::vector<LabeledSentence>& data) const {
  if (data.empty()) throw DataError("classifier: accuracy over empty data");
  long hits = 0;
  for (const auto& ex : data)
    if (predict(ex.text) == ex.label) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(data.size());
}

int TextClassifier::build_nll(Tape& tape, const LabeledSentence& ex, Rng* dropout_rng) const {
  if (ex.text.ids.empty()) throw DataError("classifier: empty sentence");
  if (ex.label < 0 || ex.label >= num_classes_)
    throw DataError("classifier: label out of range");
  LstmSpec spec{WRef::param(lstm_w_), WRef::param(lstm_b_), cfg_.hidden, cfg_.embed};
  LstmNodes st{tape.constant(Vec::Zero(cfg_.hidden)), tape.constant(Vec::Zero(cfg_.hidden))};
  std::vector<int> states;
  states.reserve(ex.text.ids.size());
  for (int token : ex.text.ids) {
    st = lstm_step(tape, spec, tape.param_row(emb_, token), st);
    states.push_back(st.h);
  }
  int pooled = tape.max_pool(states);
  if (dropout_rng && cfg_.dropout > 0)
    pooled = tape.hadamard(pooled, tape.constant(dropout_mask(cfg_.hidden, cfg_.dropout, *dropout_rng)));
  const int logits = tape.add(tape.matvec(WRef::param(out_w_), pooled), tape.param_vec(out_b_));
  return tape.scale(tape.pick(tape.log_softmax(logits), ex.label), -1.0);
}

void TextClassifier::save(const std::string& path) const {
  json header;
  header["kind"] = "classifier";
  header["vocab_hash"] = to_hex(vocab_hash_);
  header["num_classes"] = num_classes_;
  header["config"] = {{"hidden", cfg_.hidden},   {"embed", cfg_.embed},
                      {"dropout", cfg_.dropout}, {"lr", cfg_.lr},
                      {"grad_clip", cfg_.grad_clip}, {"batch", cfg_.batch},
                      {"epochs", cfg_.epochs},   {"seed", cfg_.seed}};
  header["epoch_losses"] = epoch_losses_;
  write_checkpoint(path, header, params_);
}

TextClassifier TextClassifier::load(const std::string& path, const Vocabulary& vocab) {
  Checkpoint ckpt = read_checkpoint(path);
  require_kind(ckpt, "classifier");
  require_vocab(ckpt, vocab.hash());
  const auto& c = ckpt.header.at("config");
  ClassifierConfig cfg;
  cfg.hidden = c.at("hidden").get<int>();
  cfg.embed = c.at("embed").get<int>();
  cfg.dropout = c.at("dropout").get<double>();
  cfg.lr = c.at("lr").get<double>();
  cfg.grad_clip = c.at("grad_clip").get<double>();
  cfg.batch = c.at("batch").get<int>();
  cfg.epochs = c.at("epochs").get<int>();
  cfg.seed = c.at("seed").get<uint64_t>();
  TextClassifier clf(vocab, ckpt.header.at("num_classes").get<int>(), cfg);
  for (auto& t : clf.params_.tensors()) {
    const int src = ckpt.params.find(t.name);
    if (src < 0) throw DataError("classifier checkpoint missing tensor " + t.name);
    const Tensor& s = ckpt.params.at(src);
    if (s.value.rows() != t.value.rows() || s.value.cols() != t.value.cols())
      throw DataError("classifier checkpoint tensor shape mismatch for " + t.name);
    t.value = s.value;
  }
  if (ckpt.header.contains("epoch_losses"))
    clf.epoch_losses_ = ckpt.header["epoch_losses"].get<std::vector<double>>();
  return clf;
}

TextClassifier train_classifier(const std::vector<LabeledSentence>& data,
                                const Vocabulary& vocab, int num_classes,
                                const ClassifierConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw DataError("classifier: training data is empty");
  std::set<int> labels;
  for (const auto& ex : data) labels.insert(ex.label);
  if (labels.size() < 2)
    throw DataError("classifier: training data must contain at least 2 classes");

  TextClassifier clf(vocab, num_classes, cfg);
  Adam opt(cfg.lr);
  Rng order_rng = Rng(cfg.seed).derive(0x0D1);
  Rng dropout_rng = Rng(cfg.seed).derive(0xDD1);
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  Tape tape(&clf.params_);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_nll = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(cfg.batch));
      clf.params_.zero_grad();
      double batch_nll = 0;
      for (size_t i = start; i < end; ++i) {
        tape.reset();
        const int nll = clf.build_nll(tape, data[order[i]], &dropout_rng);
        const int loss = tape.scale(nll, 1.0 / static_cast<double>(end - start));
        batch_nll += tape.value_scalar(nll);
        tape.backward(loss);
      }
      if (!std::isfinite(batch_nll))
        throw TrainError("classifier: non-finite loss at epoch " + std::to_string(epoch));
      clf.params_.clip_grad(cfg.grad_clip);
      opt.step(clf.params_);
      epoch_nll += batch_nll;
    }
    clf.epoch_losses_.push_back(epoch_nll / static_cast<double>(data.size()));
  }
  return clf;
}

std::vector<LabeledSentence> domain_labeled(const std::vector<std::vector<Sentence>>& by_domain) {
  std::vector<LabeledSentence> out;
  for (size_t j = 0; j < by_domain.size(); ++j)
    for (const auto& s : by_domain[j])
      out.push_back({s, static_cast<int>(j)});
  return out;
}

}  // namespace styleobf
