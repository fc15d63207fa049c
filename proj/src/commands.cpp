#include "styleobf/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "styleobf/fairness.hpp"
#include "styleobf/metrics.hpp"
#include "styleobf/obfuscator.hpp"
#include "styleobf/runconfig.hpp"
#include "styleobf/synthetic.hpp"

namespace styleobf {

namespace {

// Shared scaffolding: every subcommand owns a RunConfig key registry; values
// come from defaults, then an optional config file, then --set overrides and
// explicit flags (command line wins).
struct CommandCtx {
  RunConfig cfg;
  std::string config_file;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key=value config file");
    app->add_option("--set", overrides, "override a config key, e.g. --set epochs=3")
        ->type_name("KEY=VALUE");
  }

  // Call after CLI11 parsing, before reading any keys.
  void resolve() {
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1), RunConfig::Source::kCli);
    }
  }

  void set_cli(const std::string& key, const std::string& value) {
    cfg.set(key, value, RunConfig::Source::kCli);
  }
};

void define_lm_keys(RunConfig& cfg) {
  cfg.define_int("hidden", 128, "LSTM hidden size");
  cfg.define_int("embed", 64, "token embedding size");
  cfg.define_real("dropout", 0.3, "dropout on the pre-projection state");
  cfg.define_real("lr", 0.001, "Adam learning rate");
  cfg.define_real("grad_clip", 5.0, "global gradient-norm clip");
  cfg.define_int("batch", 32, "sentences per optimizer step");
  cfg.define_int("epochs", 10, "training epochs");
  cfg.define_int("seed", 1, "random seed");
}

LMConfig lm_config_from(const RunConfig& cfg) {
  LMConfig out;
  out.hidden = static_cast<int>(cfg.get_int("hidden"));
  out.embed = static_cast<int>(cfg.get_int("embed"));
  out.dropout = cfg.get_real("dropout");
  out.lr = cfg.get_real("lr");
  out.grad_clip = cfg.get_real("grad_clip");
  out.batch = static_cast<int>(cfg.get_int("batch"));
  out.epochs = static_cast<int>(cfg.get_int("epochs"));
  out.seed = static_cast<uint64_t>(cfg.get_int("seed"));
  out.validate();
  return out;
}

ClassifierConfig classifier_config_from(const RunConfig& cfg, const std::string& prefix) {
  ClassifierConfig out;
  out.hidden = static_cast<int>(cfg.get_int(prefix + "hidden"));
  out.embed = static_cast<int>(cfg.get_int(prefix + "embed"));
  out.dropout = cfg.get_real(prefix + "dropout");
  out.lr = cfg.get_real(prefix + "lr");
  out.grad_clip = cfg.get_real(prefix + "grad_clip");
  out.batch = static_cast<int>(cfg.get_int(prefix + "batch"));
  out.epochs = static_cast<int>(cfg.get_int(prefix + "epochs"));
  out.seed = static_cast<uint64_t>(cfg.get_int("seed"));
  out.validate();
  return out;
}

Vocabulary vocab_for(const std::string& data_dir, const std::string& vocab_file) {
  if (!vocab_file.empty()) return Vocabulary::load(vocab_file);
  if (!data_dir.empty()) return Vocabulary::load(data_dir + "/vocab.txt");
  throw ConfigError("either --data or --vocab is required");
}

void finish_manifest(RunManifest& manifest, const std::string& path) {
  save_manifest(manifest, path);
  std::cout << "manifest: " << path << "\n";
}

// ---------------------------------------------------------------- synth-build

int cmd_synth_build(CommandCtx& ctx, const std::string& out_dir) {
  ctx.resolve();
  const RunConfig& cfg = ctx.cfg;
  SyntheticConfig scfg;
  scfg.train_size = cfg.get_int("train_size");
  scfg.test_size = cfg.get_int("test_size");
  scfg.num_domains = static_cast<int>(cfg.get_int("domains"));
  scfg.words_per_domain = static_cast<int>(cfg.get_int("words_per_domain"));
  scfg.top_k = static_cast<int>(cfg.get_int("top_k"));
  scfg.min_count = static_cast<int>(cfg.get_int("min_count"));
  scfg.seed = static_cast<uint64_t>(cfg.get_int("seed"));
  scfg.validate();

  const SyntheticBuild build = make_synthetic_build(scfg);
  save_synthetic_build(build, out_dir);

  std::cout << "vocab size: " << build.dataset.vocab.size() << "\n";
  for (int j = 0; j < build.corruption.num_domains(); ++j) {
    std::cout << "domain " << j << " words:";
    for (const auto& w : build.corruption.words[static_cast<size_t>(j)]) std::cout << " " << w;
    std::cout << "\n";
  }
  std::cout << "train sentences: " << build.dataset.train_size()
            << ", test sentences: " << build.dataset.test_size() << "\n";

  RunManifest manifest = make_manifest("synth-build", scfg.seed, cfg);
  manifest_add_output(manifest, out_dir + "/vocab.txt");
  manifest_add_output(manifest, out_dir + "/corruption.json");
  for (int j = 0; j < scfg.num_domains; ++j) {
    manifest_add_output(manifest, out_dir + "/train." + std::to_string(j) + ".txt");
    manifest_add_output(manifest, out_dir + "/test." + std::to_string(j) + ".txt");
  }
  finish_manifest(manifest, out_dir + "/manifest.json");
  return 0;
}

// ------------------------------------------------------------------- train-lm

int cmd_train_lm(CommandCtx& ctx, const std::string& data_dir, const std::string& out_file,
                 int domain, bool reference, const std::string& clf_path) {
  ctx.resolve();
  const int sources = (domain >= 0 ? 1 : 0) + (reference ? 1 : 0) + (!clf_path.empty() ? 1 : 0);
  if (sources != 1)
    throw ConfigError("train-lm needs exactly one of --domain, --reference, --misclassified");

  const LMConfig lm_cfg = lm_config_from(ctx.cfg);
  RunManifest manifest = make_manifest("train-lm", lm_cfg.seed, ctx.cfg);
  manifest_add_input(manifest, data_dir + "/vocab.txt");

  std::unique_ptr<DomainLM> lm;
  if (reference) {
    const SyntheticBuild build = load_synthetic_build(data_dir);
    lm = std::make_unique<DomainLM>(train_reference_lm(build.train_refs, build.dataset.vocab, lm_cfg));
  } else if (!clf_path.empty()) {
    const MultiDomainDataset ds = load_dataset(data_dir);
    const TextClassifier clf = TextClassifier::load(clf_path, ds.vocab);
    manifest_add_input(manifest, clf_path);
    lm = std::make_unique<DomainLM>(
        train_misclassified_lm(ds, clf, lm_cfg, ctx.cfg.get_int("min_sentences")));
  } else {
    const MultiDomainDataset ds = load_dataset(data_dir);
    if (domain >= ds.num_domains)
      throw ConfigError("train-lm: --domain out of range, dataset has " +
                        std::to_string(ds.num_domains) + " domains");
    lm = std::make_unique<DomainLM>(
        train_domain_lm(ds.train[static_cast<size_t>(domain)], ds.vocab, lm_cfg));
  }

  for (size_t e = 0; e < lm->epoch_losses().size(); ++e)
    std::cout << "epoch " << e << " nll/token " << lm->epoch_losses()[e] << "\n";
  lm->save(out_file);
  std::cout << "model: " << out_file << "\n";
  manifest_add_output(manifest, out_file);
  finish_manifest(manifest, out_file + ".manifest.json");
  return 0;
}

// ------------------------------------------------------------ train-classifier

int cmd_train_classifier(CommandCtx& ctx, const std::string& data_dir,
                         const std::string& out_file) {
  ctx.resolve();
  const ClassifierConfig clf_cfg = classifier_config_from(ctx.cfg, "");
  const MultiDomainDataset ds = load_dataset(data_dir);
  const TextClassifier clf = train_classifier(domain_labeled(ds.train), ds.vocab,
                                              ds.num_domains, clf_cfg);
  for (size_t e = 0; e < clf.epoch_losses().size(); ++e)
    std::cout << "epoch " << e << " loss " << clf.epoch_losses()[e] << "\n";
  std::cout << "test accuracy: " << clf.accuracy(domain_labeled(ds.test)) << "%\n";
  clf.save(out_file);
  std::cout << "model: " << out_file << "\n";

  RunManifest manifest = make_manifest("train-classifier", clf_cfg.seed, ctx.cfg);
  manifest_add_input(manifest, data_dir + "/vocab.txt");
  manifest_add_output(manifest, out_file);
  finish_manifest(manifest, out_file + ".manifest.json");
  return 0;
}

// ----------------------------------------------------------------- make-prior

int cmd_make_prior(CommandCtx& ctx, const std::string& mode_name,
                   const std::vector<std::string>& lm_paths, const std::string& out_file) {
  ctx.resolve();
  const PriorMode mode = prior_mode_from_string(mode_name);
  if (mode == PriorMode::kSingle && lm_paths.size() != 1)
    throw ConfigError("single prior takes exactly one --lm");
  if (mode != PriorMode::kSingle && lm_paths.size() < 2)
    throw ConfigError(mode_name + " prior needs at least two --lm members");
  for (const auto& p : lm_paths)
    if (!file_exists(p)) throw DataError("prior member checkpoint missing: " + p);
  save_prior_descriptor(out_file, mode, lm_paths);
  std::cout << "prior: " << out_file << "\n";
  return 0;
}

// ----------------------------------------------------------- train-obfuscator

ObfuscatorConfig obf_config_from(const RunConfig& cfg) {
  ObfuscatorConfig out;
  out.hidden = static_cast<int>(cfg.get_int("hidden"));
  out.embed = static_cast<int>(cfg.get_int("embed"));
  out.domain_embed = static_cast<int>(cfg.get_int("domain_embed"));
  out.dropout = cfg.get_real("dropout");
  out.lambda_kl = cfg.get_real("lambda");
  out.gumbel_tau = cfg.get_real("tau");
  out.gamma = cfg.get_real("gamma");
  out.lr = cfg.get_real("lr");
  out.grad_clip = cfg.get_real("grad_clip");
  out.batch = static_cast<int>(cfg.get_int("batch"));
  out.epochs = static_cast<int>(cfg.get_int("epochs"));
  out.seed = static_cast<uint64_t>(cfg.get_int("seed"));
  out.checkpoint_dir = cfg.get_string("checkpoint_dir");
  out.validate();
  return out;
}

int cmd_train_obfuscator(CommandCtx& ctx, const std::string& data_dir,
                         const std::string& prior_file, const std::string& out_file) {
  ctx.resolve();
  const ObfuscatorConfig obf_cfg = obf_config_from(ctx.cfg);
  const MultiDomainDataset ds = load_dataset(data_dir);
  const PriorPool prior = load_prior_from_descriptor(prior_file, ds.vocab);
  if (prior.mode() == PriorMode::kSingle && prior.num_members() != 1)
    throw ConfigError("single prior must have exactly one member");
  if (prior.mode() != PriorMode::kSingle && prior.num_members() < 2)
    throw ConfigError("intersection and union priors need at least two members");

  const ObfTrainResult result = train_obfuscator(
      ds, prior, obf_cfg, nullptr, [](int epoch, const EpochStats& s) {
        std::cout << "epoch " << epoch << " loss " << s.loss << " recon_nll " << s.recon_nll
                  << " kl " << s.kl << std::endl;
      });
  result.model.save(out_file);
  std::cout << "model: " << out_file << "\n";

  RunManifest manifest = make_manifest("train-obfuscator", obf_cfg.seed, ctx.cfg);
  manifest_add_input(manifest, data_dir + "/vocab.txt");
  manifest_add_input(manifest, prior_file);
  manifest_add_output(manifest, out_file);
  finish_manifest(manifest, out_file + ".manifest.json");
  return 0;
}

// ------------------------------------------------------ obfuscate / backtranslate

int cmd_obfuscate(CommandCtx& ctx, const std::string& model_file, const std::string& data_dir,
                  const std::string& vocab_file, const std::string& in_file,
                  const std::string& out_file, double gamma, int bt_domain) {
  ctx.resolve();
  const Vocabulary vocab = vocab_for(data_dir, vocab_file);
  const ObfuscatorModel model = ObfuscatorModel::load(model_file, vocab);
  if (bt_domain >= model.num_domains())
    throw ConfigError("--domain out of range, model has " +
                      std::to_string(model.num_domains()) + " domains");

  const std::vector<std::string> lines = read_lines(in_file);
  std::vector<std::string> out_lines;
  for (const auto& line : lines) {
    const Sentence x = tokenize(vocab, line);
    const Sentence y = bt_domain >= 0 ? model.back_translate(x, bt_domain)
                                      : model.obfuscate(x, gamma);
    out_lines.push_back(detokenize(vocab, y));
  }
  write_lines(out_file, out_lines);
  std::cout << "wrote " << out_lines.size() << " sentences to " << out_file << "\n";

  RunManifest manifest =
      make_manifest(bt_domain >= 0 ? "backtranslate" : "obfuscate", 0, ctx.cfg);
  manifest_add_input(manifest, model_file);
  manifest_add_input(manifest, in_file);
  manifest_add_output(manifest, out_file);
  finish_manifest(manifest, out_file + ".manifest.json");
  return 0;
}

// ----------------------------------------------------------------- score-words

int cmd_score_words(CommandCtx& ctx, const std::string& data_dir, const std::string& out_file) {
  ctx.resolve();
  const MultiDomainDataset ds = load_dataset(data_dir);
  const StyleScoreTable table = style_scores(domain_frequencies(ds));

  std::vector<std::pair<std::string, double>> rows;
  for (int w = Vocabulary::kNumSpecial; w < ds.vocab.size(); ++w)
    rows.emplace_back(ds.vocab.token(w), table.scores[w]);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::ostringstream out;
  for (const auto& [token, score] : rows) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", score);
    out << token << "\t" << buf << "\n";
  }
  if (out_file.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream f(out_file);
    if (!f) throw DataError("cannot write " + out_file);
    f << out.str();
    std::cout << "wrote " << rows.size() << " rows to " << out_file << "\n";
  }
  return 0;
}

// ----------------------------------------------------------------------- eval

// Runs an external scoring command over the given sentences: sentences go to
// a temp file, the command reads them on stdin, and its stdout is recorded
// verbatim in the report.
nlohmann::json external_perplexity(const std::string& command,
                                   const std::vector<std::string>& sentences,
                                   const std::string& scratch_prefix) {
  const std::string in_path = scratch_prefix + ".sentences.txt";
  const std::string out_path = scratch_prefix + ".ext.out";
  write_lines(in_path, sentences);
  const std::string full = command + " < " + in_path + " > " + out_path + " 2>&1";
  const int status = std::system(full.c_str());
  nlohmann::json j;
  j["command"] = command;
  j["exit_status"] = status;
  std::string output;
  if (file_exists(out_path)) {
    std::ifstream f(out_path);
    std::ostringstream ss;
    ss << f.rdbuf();
    output = ss.str();
  }
  j["output"] = output;
  return j;
}

int cmd_eval_synthetic(CommandCtx& ctx, const std::string& data_dir,
                       const std::string& model_file, const std::string& clf_path,
                       const std::string& report_file, const std::string& records_file) {
  const RunConfig& cfg = ctx.cfg;
  const SyntheticBuild build = load_synthetic_build(data_dir);
  const MultiDomainDataset& ds = build.dataset;
  const ObfuscatorModel model = ObfuscatorModel::load(model_file, ds.vocab);
  const double gamma = cfg.get_real("gamma");
  const double threshold = cfg.get_real("confidence_threshold");

  // Obfuscate the test split, then back-translate toward each source domain.
  std::vector<std::vector<Sentence>> obf(static_cast<size_t>(ds.num_domains));
  std::vector<Sentence> flat_x, flat_y, flat_bt, flat_refs;
  std::vector<int> labels;
  for (int j = 0; j < ds.num_domains; ++j) {
    const auto sj = static_cast<size_t>(j);
    for (size_t i = 0; i < ds.test[sj].size(); ++i) {
      const Sentence& x = ds.test[sj][i];
      Sentence y = model.obfuscate(x, gamma);
      flat_x.push_back(x);
      flat_bt.push_back(model.back_translate(y, j));
      flat_refs.push_back(build.test_refs[sj][i]);
      flat_y.push_back(y);
      labels.push_back(j);
      obf[sj].push_back(std::move(y));
    }
  }

  nlohmann::json report;
  report["kind"] = "synthetic";
  report["sentences"] = flat_y.size();

  const CorruptionStats stats = corruption_stats(ds.test, obf, ds.vocab, build.corruption);
  report["corruption"] = {{"corrected", stats.corrected},
                          {"remaining", stats.remaining},
                          {"removed", stats.removed},
                          {"spread", stats.spread}};
  report["bt_accuracy"] = bt_accuracy(flat_x, flat_bt);
  report["bleu"] = bleu(flat_y, flat_refs);
  report["gleu"] = gleu(flat_y, flat_refs);
  report["lexical_diversity"] = lexical_diversity(flat_y);

  if (!clf_path.empty()) {
    const TextClassifier clf = TextClassifier::load(clf_path, ds.vocab);
    const auto records = classify(clf, flat_y, labels, std::vector<int>(labels.size(), 0));
    double correct = 0, entropy_sum = 0;
    for (const auto& r : records) {
      if (r.predicted == r.true_label) ++correct;
      Vec p(r.probs.size());
      for (size_t k = 0; k < r.probs.size(); ++k) p[static_cast<long>(k)] = r.probs[k];
      entropy_sum += entropy_bits(p);
    }
    report["classifier"] = {
        {"accuracy", 100.0 * correct / static_cast<double>(records.size())},
        {"mean_entropy_bits", entropy_sum / static_cast<double>(records.size())},
        {"confident_rate", confident_response_rate(records, threshold)},
        {"threshold", threshold}};
    if (!records_file.empty()) {
      save_prediction_records(records_file, records);
      std::cout << "records: " << records_file << "\n";
    }
  }

  const std::string ext_cmd = cfg.get_string("ext_ppl_cmd");
  if (!ext_cmd.empty())
    report["external_perplexity"] =
        external_perplexity(ext_cmd, detokenize_all(ds.vocab, flat_y), report_file);

  std::ofstream out(report_file);
  if (!out) throw DataError("cannot write " + report_file);
  out << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";

  RunManifest manifest = make_manifest("eval", static_cast<uint64_t>(cfg.get_int("seed")), cfg);
  manifest_add_input(manifest, data_dir + "/vocab.txt");
  manifest_add_input(manifest, model_file);
  if (!clf_path.empty()) manifest_add_input(manifest, clf_path);
  manifest_add_output(manifest, report_file);
  finish_manifest(manifest, report_file + ".manifest.json");
  return 0;
}

std::vector<double> parse_ratios(const std::string& text) {
  std::vector<double> ratios;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    ratios.push_back(std::stod(item));
  }
  if (ratios.empty()) throw ConfigError("ratios list is empty");
  return ratios;
}

int cmd_eval_fairness(CommandCtx& ctx, const std::string& report_file) {
  const RunConfig& cfg = ctx.cfg;
  const uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed"));
  const ProxyCorpus corpus = generate_proxy_corpus(cfg.get_int("per_cell"),
                                                   cfg.get_real("noise"), seed);
  const MultiDomainDataset ds = attr_domain_dataset(corpus, cfg.get_real("train_fraction"));

  LMConfig lm_cfg;
  lm_cfg.hidden = static_cast<int>(cfg.get_int("hidden"));
  lm_cfg.embed = static_cast<int>(cfg.get_int("embed"));
  lm_cfg.epochs = static_cast<int>(cfg.get_int("lm_epochs"));
  lm_cfg.seed = mix64(seed, 71);
  std::vector<std::shared_ptr<const DomainLM>> members;
  for (int j = 0; j < 2; ++j) {
    std::cout << "training prior member " << j << "...\n";
    LMConfig c = lm_cfg;
    c.seed = mix64(lm_cfg.seed, static_cast<uint64_t>(j));
    members.push_back(std::make_shared<DomainLM>(
        train_domain_lm(ds.train[static_cast<size_t>(j)], ds.vocab, c)));
  }
  const PriorPool prior(PriorMode::kIntersection, members);

  ObfuscatorConfig obf_cfg;
  obf_cfg.hidden = static_cast<int>(cfg.get_int("hidden"));
  obf_cfg.embed = static_cast<int>(cfg.get_int("embed"));
  obf_cfg.domain_embed = static_cast<int>(cfg.get_int("domain_embed"));
  obf_cfg.lambda_kl = cfg.get_real("lambda");
  obf_cfg.gumbel_tau = cfg.get_real("tau");
  obf_cfg.gamma = cfg.get_real("gamma");
  obf_cfg.epochs = static_cast<int>(cfg.get_int("epochs"));
  obf_cfg.seed = mix64(seed, 72);
  obf_cfg.validate();
  std::cout << "training obfuscator...\n";
  const ObfTrainResult trained = train_obfuscator(
      ds, prior, obf_cfg, nullptr, [](int epoch, const EpochStats& s) {
        std::cout << "epoch " << epoch << " loss " << s.loss << std::endl;
      });

  const ClassifierConfig clf_cfg = classifier_config_from(cfg, "clf_");
  const auto rows = fairness_experiment(corpus, trained.model, parse_ratios(cfg.get_string("ratios")),
                                        cfg.get_int("train_per_class"),
                                        cfg.get_int("test_per_class"), clf_cfg, mix64(seed, 73));

  nlohmann::json report;
  report["kind"] = "fairness";
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"ratio", r.ratio},
                   {"gap_original", r.gap_original},
                   {"gap_obfuscated", r.gap_obfuscated},
                   {"acc_original", r.acc_original},
                   {"acc_obfuscated", r.acc_obfuscated}});
    std::cout << "ratio " << r.ratio << ": gap " << r.gap_original << " -> " << r.gap_obfuscated
              << ", acc " << r.acc_original << " -> " << r.acc_obfuscated << "\n";
  }
  report["rows"] = arr;
  std::ofstream out(report_file);
  if (!out) throw DataError("cannot write " + report_file);
  out << report.dump(2) << "\n";

  RunManifest manifest = make_manifest("eval", seed, cfg);
  manifest_add_output(manifest, report_file);
  finish_manifest(manifest, report_file + ".manifest.json");
  return 0;
}

int cmd_eval_general(CommandCtx& ctx, const std::string& records_file,
                     const std::string& cand_file, const std::string& ref_file,
                     const std::string& report_file) {
  const RunConfig& cfg = ctx.cfg;
  nlohmann::json report;
  report["kind"] = "general";

  if (!records_file.empty()) {
    const auto records = load_prediction_records(records_file);
    double correct = 0, entropy_sum = 0;
    for (const auto& r : records) {
      if (r.predicted == r.true_label) ++correct;
      Vec p(r.probs.size());
      for (size_t k = 0; k < r.probs.size(); ++k) p[static_cast<long>(k)] = r.probs[k];
      entropy_sum += entropy_bits(p);
    }
    report["accuracy"] = 100.0 * correct / static_cast<double>(records.size());
    report["mean_entropy_bits"] = entropy_sum / static_cast<double>(records.size());
    report["confident_rate"] =
        confident_response_rate(records, cfg.get_real("confidence_threshold"));
    report["threshold"] = cfg.get_real("confidence_threshold");
    if (cfg.get_int("gap_label") >= 0)
      report["tpr_gap"] = tpr_gap(records, static_cast<int>(cfg.get_int("gap_attr")),
                                  static_cast<int>(cfg.get_int("gap_label")));
  }

  if (!cand_file.empty()) {
    if (ref_file.empty())
      throw ConfigError("eval --kind general needs --references with --candidates");
    const auto cand_lines = read_lines(cand_file);
    const auto ref_lines = read_lines(ref_file);
    if (cand_lines.size() != ref_lines.size())
      throw DataError("candidates and references differ in line count");
    std::vector<std::vector<std::string>> corpora = {cand_lines, ref_lines};
    const Vocabulary vocab = build_vocabulary(corpora, 1);
    const auto cands = tokenize_lines(vocab, cand_lines);
    const auto refs = tokenize_lines(vocab, ref_lines);
    report["bleu"] = bleu(cands, refs);
    report["gleu"] = gleu(cands, refs);
    report["lexical_diversity"] = lexical_diversity(cands);
    report["bt_accuracy"] = bt_accuracy(refs, cands);
  }

  if (records_file.empty() && cand_file.empty())
    throw ConfigError("eval --kind general needs --records or --candidates/--references");

  std::ofstream out(report_file);
  if (!out) throw DataError("cannot write " + report_file);
  out << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"style obfuscation toolkit"};
  app.require_subcommand(1);
  int rc = 0;

  // ------------------------------------------------------------- synth-build
  auto ctx_synth = std::make_shared<CommandCtx>();
  std::string synth_out;
  {
    CLI::App* sub = app.add_subcommand("synth-build", "generate the synthetic corpus");
    RunConfig& cfg = ctx_synth->cfg;
    cfg.define_int("train_size", 30000, "training sentences in total");
    cfg.define_int("test_size", 3000, "test sentences in total");
    cfg.define_int("domains", 3, "number of domains");
    cfg.define_int("words_per_domain", 5, "corrupted words per domain");
    cfg.define_int("top_k", 20, "candidate pool: most frequent words");
    cfg.define_int("min_count", 1, "vocabulary frequency cutoff");
    cfg.define_int("seed", 1, "random seed");
    ctx_synth->attach(sub);
    sub->add_option("--out", synth_out, "output dataset directory")->required();
    sub->callback([&, ctx_synth] { rc = cmd_synth_build(*ctx_synth, synth_out); });
  }

  // ---------------------------------------------------------------- train-lm
  auto ctx_lm = std::make_shared<CommandCtx>();
  std::string lm_data, lm_out, lm_clf;
  int lm_domain = -1;
  bool lm_reference = false;
  {
    CLI::App* sub = app.add_subcommand("train-lm", "train a domain language model");
    define_lm_keys(ctx_lm->cfg);
    ctx_lm->cfg.define_int("min_sentences", 1000,
                           "minimum misclassified sentences for --misclassified");
    ctx_lm->attach(sub);
    sub->add_option("--data", lm_data, "dataset directory")->required();
    sub->add_option("--out", lm_out, "output checkpoint")->required();
    sub->add_option("--domain", lm_domain, "train on this domain's corrupted split");
    sub->add_flag("--reference", lm_reference, "train on the uncorrupted reference text");
    sub->add_option("--misclassified", lm_clf,
                    "train on sentences this classifier checkpoint misclassifies");
    sub->callback([&, ctx_lm] {
      rc = cmd_train_lm(*ctx_lm, lm_data, lm_out, lm_domain, lm_reference, lm_clf);
    });
  }

  // -------------------------------------------------------- train-classifier
  auto ctx_clf = std::make_shared<CommandCtx>();
  std::string clf_data, clf_out;
  {
    CLI::App* sub = app.add_subcommand("train-classifier", "train the domain classifier");
    RunConfig& cfg = ctx_clf->cfg;
    cfg.define_int("hidden", 128, "LSTM hidden size");
    cfg.define_int("embed", 64, "token embedding size");
    cfg.define_real("dropout", 0.3, "dropout before the readout");
    cfg.define_real("lr", 0.001, "Adam learning rate");
    cfg.define_real("grad_clip", 5.0, "global gradient-norm clip");
    cfg.define_int("batch", 32, "sentences per optimizer step");
    cfg.define_int("epochs", 5, "training epochs");
    cfg.define_int("seed", 1, "random seed");
    ctx_clf->attach(sub);
    sub->add_option("--data", clf_data, "dataset directory")->required();
    sub->add_option("--out", clf_out, "output checkpoint")->required();
    sub->callback([&, ctx_clf] { rc = cmd_train_classifier(*ctx_clf, clf_data, clf_out); });
  }

  // -------------------------------------------------------------- make-prior
  auto ctx_prior = std::make_shared<CommandCtx>();
  std::string prior_mode, prior_out;
  std::vector<std::string> prior_lms;
  {
    CLI::App* sub = app.add_subcommand("make-prior", "write a prior descriptor");
    ctx_prior->attach(sub);
    sub->add_option("--mode", prior_mode, "intersection | union | single")->required();
    sub->add_option("--lm", prior_lms, "member language-model checkpoint (repeatable)")
        ->required();
    sub->add_option("--out", prior_out, "output descriptor path")->required();
    sub->callback(
        [&, ctx_prior] { rc = cmd_make_prior(*ctx_prior, prior_mode, prior_lms, prior_out); });
  }

  // --------------------------------------------------------- train-obfuscator
  auto ctx_obf = std::make_shared<CommandCtx>();
  std::string obf_data, obf_prior, obf_out;
  {
    CLI::App* sub = app.add_subcommand("train-obfuscator", "train the obfuscation model");
    RunConfig& cfg = ctx_obf->cfg;
    cfg.define_int("hidden", 128, "LSTM hidden size");
    cfg.define_int("embed", 64, "token embedding size");
    cfg.define_int("domain_embed", 16, "domain embedding size");
    cfg.define_real("dropout", 0.3, "dropout on the attention readout");
    cfg.define_real("lambda", 0.02, "weight of the KL term");
    cfg.define_real("tau", 0.01, "straight-through sampling temperature");
    cfg.define_real("gamma", 0.0, "style de-boosting strength");
    cfg.define_real("lr", 0.001, "Adam learning rate");
    cfg.define_real("grad_clip", 5.0, "global gradient-norm clip");
    cfg.define_int("batch", 32, "sentences per optimizer step");
    cfg.define_int("epochs", 10, "training epochs");
    cfg.define_int("seed", 1, "random seed");
    cfg.define_string("checkpoint_dir", "", "per-epoch checkpoint directory (optional)");
    ctx_obf->attach(sub);
    sub->add_option("--data", obf_data, "dataset directory")->required();
    sub->add_option("--prior", obf_prior, "prior descriptor path")->required();
    sub->add_option("--out", obf_out, "output checkpoint")->required();
    sub->callback(
        [&, ctx_obf] { rc = cmd_train_obfuscator(*ctx_obf, obf_data, obf_prior, obf_out); });
  }

  // ------------------------------------------------- obfuscate / backtranslate
  auto ctx_run = std::make_shared<CommandCtx>();
  std::string run_model, run_data, run_vocab, run_in, run_out;
  double run_gamma = -1.0;
  {
    CLI::App* sub = app.add_subcommand("obfuscate", "rewrite text into the latent style");
    ctx_run->attach(sub);
    sub->add_option("--model", run_model, "obfuscator checkpoint")->required();
    sub->add_option("--data", run_data, "dataset directory holding vocab.txt");
    sub->add_option("--vocab", run_vocab, "vocabulary file");
    sub->add_option("--in", run_in, "input text, one sentence per line")->required();
    sub->add_option("--out", run_out, "output text path")->required();
    sub->add_option("--gamma", run_gamma, "de-boosting override (default: trained value)");
    sub->callback([&, ctx_run] {
      rc = cmd_obfuscate(*ctx_run, run_model, run_data, run_vocab, run_in, run_out, run_gamma, -1);
    });
  }
  auto ctx_bt = std::make_shared<CommandCtx>();
  std::string bt_model, bt_data, bt_vocab, bt_in, bt_out;
  int bt_domain = 0;
  {
    CLI::App* sub = app.add_subcommand("backtranslate", "rewrite latent text toward a domain");
    ctx_bt->attach(sub);
    sub->add_option("--model", bt_model, "obfuscator checkpoint")->required();
    sub->add_option("--data", bt_data, "dataset directory holding vocab.txt");
    sub->add_option("--vocab", bt_vocab, "vocabulary file");
    sub->add_option("--in", bt_in, "input text, one sentence per line")->required();
    sub->add_option("--out", bt_out, "output text path")->required();
    sub->add_option("--domain", bt_domain, "target domain index")->required();
    sub->callback([&, ctx_bt] {
      rc = cmd_obfuscate(*ctx_bt, bt_model, bt_data, bt_vocab, bt_in, bt_out, -1.0, bt_domain);
    });
  }

  // -------------------------------------------------------------- score-words
  auto ctx_scores = std::make_shared<CommandCtx>();
  std::string scores_data, scores_out;
  {
    CLI::App* sub = app.add_subcommand("score-words", "style salience per vocabulary word");
    ctx_scores->attach(sub);
    sub->add_option("--data", scores_data, "dataset directory")->required();
    sub->add_option("--out", scores_out, "output TSV (default: stdout)");
    sub->callback(
        [&, ctx_scores] { rc = cmd_score_words(*ctx_scores, scores_data, scores_out); });
  }

  // --------------------------------------------------------------------- eval
  auto ctx_eval = std::make_shared<CommandCtx>();
  std::string eval_kind, eval_data, eval_model, eval_clf, eval_report, eval_records;
  std::string eval_cand, eval_ref;
  {
    CLI::App* sub = app.add_subcommand("eval", "evaluation reports");
    RunConfig& cfg = ctx_eval->cfg;
    cfg.define_int("seed", 1, "random seed");
    cfg.define_real("gamma", -1.0, "de-boosting override, negative = trained value");
    cfg.define_real("confidence_threshold", 0.75, "confident-response threshold");
    cfg.define_string("ext_ppl_cmd", "", "external scorer command reading sentences on stdin");
    cfg.define_int("gap_attr", 1, "attribute group for the TPR gap");
    cfg.define_int("gap_label", -1, "class for the TPR gap, negative = skip");
    // fairness pipeline keys
    cfg.define_int("per_cell", 4000, "proxy sentences per (class, attribute) cell");
    cfg.define_real("noise", 0.1, "proxy class-signal noise rate");
    cfg.define_real("train_fraction", 0.8, "obfuscator train fraction of the proxy corpus");
    cfg.define_string("ratios", "0.5,0.8,0.95", "imbalance ratios, comma separated");
    cfg.define_int("train_per_class", 2000, "classifier training sentences per class");
    cfg.define_int("test_per_class", 2000, "classifier test sentences per class");
    cfg.define_int("hidden", 64, "proxy model hidden size");
    cfg.define_int("embed", 32, "proxy model embedding size");
    cfg.define_int("domain_embed", 8, "proxy obfuscator domain embedding size");
    cfg.define_real("lambda", 0.02, "proxy obfuscator KL weight");
    cfg.define_real("tau", 0.01, "proxy obfuscator sampling temperature");
    cfg.define_int("epochs", 5, "proxy obfuscator epochs");
    cfg.define_int("lm_epochs", 5, "proxy prior member epochs");
    cfg.define_int("clf_hidden", 64, "experiment classifier hidden size");
    cfg.define_int("clf_embed", 32, "experiment classifier embedding size");
    cfg.define_real("clf_dropout", 0.3, "experiment classifier dropout");
    cfg.define_real("clf_lr", 0.001, "experiment classifier learning rate");
    cfg.define_real("clf_grad_clip", 5.0, "experiment classifier gradient clip");
    cfg.define_int("clf_batch", 32, "experiment classifier batch size");
    cfg.define_int("clf_epochs", 3, "experiment classifier epochs");
    ctx_eval->attach(sub);
    sub->add_option("--kind", eval_kind, "synthetic | fairness | general")->required();
    sub->add_option("--data", eval_data, "dataset directory (synthetic)");
    sub->add_option("--model", eval_model, "obfuscator checkpoint (synthetic)");
    sub->add_option("--classifier", eval_clf, "classifier checkpoint (synthetic)");
    sub->add_option("--report", eval_report, "output report JSON")->required();
    sub->add_option("--records", eval_records, "output prediction records JSONL (synthetic)");
    sub->add_option("--candidates", eval_cand, "candidate sentences file (general)");
    sub->add_option("--references", eval_ref, "reference sentences file (general)");
    sub->callback([&, ctx_eval] {
      ctx_eval->resolve();
      if (eval_kind == "synthetic") {
        if (eval_data.empty() || eval_model.empty())
          throw ConfigError("eval --kind synthetic needs --data and --model");
        rc = cmd_eval_synthetic(*ctx_eval, eval_data, eval_model, eval_clf, eval_report,
                                eval_records);
      } else if (eval_kind == "fairness") {
        rc = cmd_eval_fairness(*ctx_eval, eval_report);
      } else if (eval_kind == "general") {
        rc = cmd_eval_general(*ctx_eval, eval_records, eval_cand, eval_ref, eval_report);
      } else {
        throw ConfigError("unknown eval kind: " + eval_kind);
      }
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const TrainError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}

}  // namespace styleobf
