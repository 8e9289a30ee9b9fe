// artic — synthetic text-to-spectrogram training toolkit for articulation
// repair experiments. One binary, batch subcommands, deterministic runs.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "artic/errors.hpp"
#include "artic/experiment.hpp"
#include "artic/loss.hpp"
#include "artic/training.hpp"
#include "artic/verify.hpp"

namespace fs = std::filesystem;
using namespace artic;

namespace {

// exit codes, one per error class (kept stable; documented in the README)
constexpr int kExitCriteria = 1;       // reproduce / verify-losses violation
constexpr int kExitContract = 65;      // invalid config or precondition
constexpr int kExitMissing = 66;       // missing artifact
constexpr int kExitIncompatible = 67;  // artifact mismatch
constexpr int kExitCorpus = 68;        // corpus data error
constexpr int kExitInsufficient = 69;  // not enough data to evaluate
constexpr int kExitInternal = 70;

int fail(const char* error_class, const std::string& msg, int code) {
  std::fprintf(stderr, "error class=%s msg=\"%s\"\n", error_class, msg.c_str());
  return code;
}

fs::path runs_root() {
  if (const char* env = std::getenv("ARTIC_RUNS_DIR")) return fs::path(env);
  return fs::path("runs");
}

fs::path resolve_run_dir(const std::string& explicit_dir, const std::string& command,
                         std::uint64_t config_hash, std::uint64_t seed) {
  if (!explicit_dir.empty()) return fs::path(explicit_dir);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-%08llx-s%llu", command.c_str(),
                static_cast<unsigned long long>(config_hash & 0xffffffffULL),
                static_cast<unsigned long long>(seed));
  return runs_root() / buf;
}

std::uint64_t json_hash(const nlohmann::json& j) {
  const std::string s = j.dump();
  return fnv1a(s.data(), s.size());
}

void print_checks(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks) {
    std::printf("%s %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
  }
}

TokenSequence parse_tokens(const PhonemeInventory& inv, const std::string& text) {
  TokenSequence tokens;
  std::string cur;
  for (char ch : text + ",") {
    if (ch == ',' || ch == ' ') {
      if (!cur.empty()) tokens.ids.push_back(inv.index_of(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  require(!tokens.ids.empty(), "no tokens given");
  return tokens;
}

void print_report(const EvalReport& report) {
  std::printf("# %s\n", report.header.c_str());
  std::printf("%-28s %10s %13s %10s %11s\n", "system", "fer_total", "fer_impaired", "fer_clean",
              "similarity");
  for (const auto& row : report.rows) {
    std::printf("%-28s %10.4f %13.4f %10.4f %11.4f\n", row.name.c_str(), row.fer.fer_total(),
                row.fer.fer_impaired(), row.fer.fer_clean(), row.similarity);
  }
}

struct GenCorpusOpts {
  std::uint64_t seed = 7;
  std::string run_dir;
  int speakers = 8;
  int sentences = 200;
  int target_sentences = 60;
  int eval_sentences = 30;
  int source_speaker = 0;
  double rho = 0.85;
  std::string mode = "substitution";
  double alpha = 5.0;
  double sigma2 = 0.05;
};

int run_gen_corpus(const GenCorpusOpts& o) {
  nlohmann::json cfg = {{"speakers", o.speakers},
                        {"sentences", o.sentences},
                        {"target_sentences", o.target_sentences},
                        {"eval_sentences", o.eval_sentences},
                        {"source_speaker", o.source_speaker},
                        {"rho", o.rho},
                        {"mode", o.mode},
                        {"alpha", o.alpha},
                        {"sigma2", o.sigma2}};
  const fs::path dir = resolve_run_dir(o.run_dir, "gen-corpus", json_hash(cfg), o.seed);
  fs::create_directories(dir);

  const int target = o.speakers;
  const auto lang = default_language(o.speakers + 1, derive_seed(o.seed, 1));
  ImpairmentSpec imp = default_impairment(lang, target);
  imp.rho = o.rho;
  if (o.mode == "eq1-sampled") {
    imp.mode = ImpairmentMode::eq1_sampled;
    imp.alpha = o.alpha;
    imp.sigma2 = o.sigma2;
  } else if (o.mode != "substitution") {
    throw ContractViolation("unknown impairment mode '" + o.mode + "'");
  }

  std::vector<int> pretrain_ids;
  for (int s = 0; s < o.speakers; ++s) pretrain_ids.push_back(s);
  save_corpus(
      generate_corpus(lang, pretrain_ids, o.sentences, std::nullopt, derive_seed(o.seed, 2)),
      dir / "pretrain");
  save_corpus(generate_corpus(lang, {target}, o.target_sentences, imp, derive_seed(o.seed, 3)),
              dir / "target_train");
  const auto target_eval =
      generate_corpus(lang, {target}, o.eval_sentences, imp, derive_seed(o.seed, 4));
  save_corpus(target_eval, dir / "target_eval");
  save_corpus(rerender_clean(target_eval, lang, o.source_speaker, derive_seed(o.seed, 5)),
              dir / "source_eval");
  std::printf("corpora written to %s\n", dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"artic: synthetic text-to-spectrogram toolkit for articulation repair"};
  app.require_subcommand(1);

  // --- gen-corpus ------------------------------------------------------------
  GenCorpusOpts gen;
  auto* cmd_gen = app.add_subcommand("gen-corpus", "generate the synthetic experiment corpora");
  cmd_gen->set_config("--config", "", "read options from an INI key=value file");
  cmd_gen->add_option("--seed", gen.seed, "corpus seed");
  cmd_gen->add_option("--run-dir", gen.run_dir, "output directory (default: hash-named)");
  cmd_gen->add_option("--speakers", gen.speakers, "pretraining speakers");
  cmd_gen->add_option("--sentences", gen.sentences, "sentences per pretraining speaker");
  cmd_gen->add_option("--target-sentences", gen.target_sentences, "target fine-tune sentences");
  cmd_gen->add_option("--eval-sentences", gen.eval_sentences, "held-out target sentences");
  cmd_gen->add_option("--source-speaker", gen.source_speaker, "clean reference speaker");
  cmd_gen->add_option("--rho", gen.rho, "substitution blend factor");
  cmd_gen->add_option("--mode", gen.mode, "substitution | eq1-sampled");
  cmd_gen->add_option("--alpha", gen.alpha, "eq1-sampled severity");
  cmd_gen->add_option("--sigma2", gen.sigma2, "eq1-sampled variance");

  // --- train-classifier --------------------------------------------------------
  struct {
    std::string corpus, out, run_dir;
    std::uint64_t seed = 7;
    int epochs = 30, batch = 32;
    double lr = 1e-3;
  } cls;
  auto* cmd_cls = app.add_subcommand("train-classifier", "train the frame-level phone classifier");
  cmd_cls->set_config("--config", "", "read options from an INI key=value file");
  cmd_cls->add_option("--corpus", cls.corpus, "corpus directory")->required();
  cmd_cls->add_option("--seed", cls.seed, "training seed");
  cmd_cls->add_option("--epochs", cls.epochs, "epochs");
  cmd_cls->add_option("--batch", cls.batch, "batch size");
  cmd_cls->add_option("--lr", cls.lr, "learning rate");
  cmd_cls->add_option("--run-dir", cls.run_dir, "output directory");
  cmd_cls->add_option("--out", cls.out, "checkpoint filename (within run dir)");

  // --- pretrain -----------------------------------------------------------------
  struct {
    std::string corpus, run_dir;
    std::uint64_t seed = 7;
    int epochs = 60, batch = 32, speakers = 0;
    double lr = 1e-3;
  } pre;
  auto* cmd_pre =
      app.add_subcommand("pretrain", "multi-speaker pretraining (reconstruction only)");
  cmd_pre->add_option("--corpus", pre.corpus, "corpus directory")->required();
  cmd_pre->add_option("--seed", pre.seed, "training seed");
  cmd_pre->add_option("--epochs", pre.epochs, "epochs");
  cmd_pre->add_option("--batch", pre.batch, "batch size");
  cmd_pre->add_option("--lr", pre.lr, "learning rate");
  cmd_pre->add_option("--speakers", pre.speakers, "speaker table rows (0: infer)");
  cmd_pre->add_option("--run-dir", pre.run_dir, "output directory");

  // --- finetune -------------------------------------------------------------------
  struct {
    std::string stage = "finetune";
    std::string pretrained, target, multi, classifier, run_dir;
    std::uint64_t seed = 7;
    int steps = 750, batch = 32;
    double lr = 1e-4, mix = 0.5;
    double beta = 0.05, gamma = 0.3, lambda = 25.0;
    bool mask_silence = false;
  } ft;
  auto* cmd_ft = app.add_subcommand("finetune", "target-speaker fine-tuning");
  cmd_ft->set_config("--config", "", "read options from an INI key=value file");
  cmd_ft->add_option("--stage", ft.stage, "finetune | baseline-finetune | ablation-no-reg");
  cmd_ft->add_option("--pretrained", ft.pretrained, "pretrained checkpoint")->required();
  cmd_ft->add_option("--target", ft.target, "target corpus directory")->required();
  cmd_ft->add_option("--multi", ft.multi, "multi-speaker corpus directory");
  cmd_ft->add_option("--classifier", ft.classifier, "frozen classifier checkpoint")->required();
  cmd_ft->add_option("--seed", ft.seed, "training seed");
  cmd_ft->add_option("--steps", ft.steps, "fine-tuning steps");
  cmd_ft->add_option("--batch", ft.batch, "batch size");
  cmd_ft->add_option("--lr", ft.lr, "learning rate");
  cmd_ft->add_option("--mix-ratio", ft.mix, "multi-speaker share per batch");
  cmd_ft->add_option("--beta", ft.beta, "regularization weight");
  cmd_ft->add_option("--gamma", ft.gamma, "consistency weight");
  cmd_ft->add_option("--lambda", ft.lambda, "severity rate");
  cmd_ft->add_flag("--mask-silence", ft.mask_silence, "exclude silence frames from the losses");
  cmd_ft->add_option("--run-dir", ft.run_dir, "output directory");

  // --- synthesize -------------------------------------------------------------------
  struct {
    std::string model, durations, tokens, out, pgm;
    int speaker = 0;
  } syn;
  auto* cmd_syn = app.add_subcommand("synthesize", "predict a mel spectrogram for a sentence");
  cmd_syn->set_config("--config", "", "read options from an INI key=value file");
  cmd_syn->add_option("--model", syn.model, "acoustic checkpoint")->required();
  cmd_syn->add_option("--durations", syn.durations, "duration checkpoint")->required();
  cmd_syn->add_option("--tokens", syn.tokens, "comma-separated phoneme symbols")->required();
  cmd_syn->add_option("--speaker", syn.speaker, "speaker id");
  cmd_syn->add_option("--out", syn.out, "output .mel path")->required();
  cmd_syn->add_option("--pgm", syn.pgm, "optional grayscale image path");

  // --- train-durations ---------------------------------------------------------------
  struct {
    std::string corpus, model, run_dir;
    std::uint64_t seed = 7;
    int epochs = 40;
  } dur;
  auto* cmd_dur = app.add_subcommand("train-durations", "train the duration predictor");
  cmd_dur->set_config("--config", "", "read options from an INI key=value file");
  cmd_dur->add_option("--corpus", dur.corpus, "corpus directory")->required();
  cmd_dur->add_option("--model", dur.model, "acoustic checkpoint (frozen encoder)")->required();
  cmd_dur->add_option("--seed", dur.seed, "training seed");
  cmd_dur->add_option("--epochs", dur.epochs, "epochs");
  cmd_dur->add_option("--run-dir", dur.run_dir, "output directory");

  // --- evaluate ---------------------------------------------------------------------
  struct {
    std::string oracle, train_classifier, corpus, model, durations, out;
    int speaker = -1;
  } ev;
  auto* cmd_ev = app.add_subcommand(
      "evaluate", "FER + speaker similarity for recordings or synthesized speech");
  cmd_ev->set_config("--config", "", "read options from an INI key=value file");
  cmd_ev->add_option("--oracle", ev.oracle, "held-out oracle classifier checkpoint")->required();
  cmd_ev
      ->add_option("--train-classifier", ev.train_classifier,
                   "training-time classifier checkpoint (refused as oracle)")
      ->required();
  cmd_ev->add_option("--corpus", ev.corpus, "evaluation corpus directory")->required();
  cmd_ev->add_option("--model", ev.model,
                     "acoustic checkpoint (synthesize instead of recordings)");
  cmd_ev->add_option("--durations", ev.durations, "duration checkpoint (with --model)");
  cmd_ev->add_option("--speaker", ev.speaker, "synthesis speaker (with --model)");
  cmd_ev->add_option("--out", ev.out, "output JSON path");

  // --- report ------------------------------------------------------------------------
  struct {
    std::string run_dir;
  } rep;
  auto* cmd_rep = app.add_subcommand("report", "re-render report.csv from a run's report.json");
  cmd_rep->set_config("--config", "", "read options from an INI key=value file");
  cmd_rep->add_option("--run-dir", rep.run_dir, "experiment run directory")->required();

  // --- verify-losses -------------------------------------------------------------------
  struct {
    std::uint64_t seed = 2024;
  } ver;
  auto* cmd_ver = app.add_subcommand("verify-losses",
                                     "run the loss derivation / gradient / sampler batteries");
  cmd_ver->set_config("--config", "", "read options from an INI key=value file");
  cmd_ver->add_option("--seed", ver.seed, "battery seed");

  // --- reproduce -------------------------------------------------------------------------
  struct {
    std::uint64_t seed = 7;
    std::string run_dir;
    int speakers = 8, sentences = 200, target_sentences = 60, eval_sentences = 30;
    int classifier_epochs = 30, pretrain_epochs = 60, finetune_steps = 750, batch = 32;
    double rho = 0.85, mix = 0.5;
    double beta = 0.05, gamma = 0.3, lambda = 25.0;
    bool pgms = false;
  } rp;
  auto* cmd_rp = app.add_subcommand(
      "reproduce", "run the full experiment end to end and assert the orderings");
  cmd_rp->set_config("--config", "", "read options from an INI key=value file");
  cmd_rp->add_option("--seed", rp.seed, "experiment seed");
  cmd_rp->add_option("--run-dir", rp.run_dir, "output directory (default: hash-named)");
  cmd_rp->add_option("--speakers", rp.speakers, "pretraining speakers");
  cmd_rp->add_option("--sentences", rp.sentences, "sentences per pretraining speaker");
  cmd_rp->add_option("--target-sentences", rp.target_sentences, "target fine-tune sentences");
  cmd_rp->add_option("--eval-sentences", rp.eval_sentences, "held-out target sentences");
  cmd_rp->add_option("--classifier-epochs", rp.classifier_epochs, "classifier epochs");
  cmd_rp->add_option("--pretrain-epochs", rp.pretrain_epochs, "pretraining epochs");
  cmd_rp->add_option("--finetune-steps", rp.finetune_steps, "fine-tuning steps");
  cmd_rp->add_option("--batch", rp.batch, "batch size");
  cmd_rp->add_option("--rho", rp.rho, "substitution blend factor");
  cmd_rp->add_option("--mix-ratio", rp.mix, "multi-speaker share per fine-tune batch");
  cmd_rp->add_option("--beta", rp.beta, "regularization weight");
  cmd_rp->add_option("--gamma", rp.gamma, "consistency weight");
  cmd_rp->add_option("--lambda", rp.lambda, "severity rate");
  cmd_rp->add_flag("--pgms", rp.pgms, "dump example spectrogram images");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_gen) return run_gen_corpus(gen);

    if (*cmd_cls) {
      nlohmann::json cfg = {{"corpus", cls.corpus},
                            {"epochs", cls.epochs},
                            {"batch", cls.batch},
                            {"lr", cls.lr}};
      const fs::path dir = resolve_run_dir(cls.run_dir, "classifier", json_hash(cfg), cls.seed);
      fs::create_directories(dir);
      const Corpus corpus = load_corpus(cls.corpus);
      ClassifierConfig config;
      config.epochs = cls.epochs;
      config.batch_size = cls.batch;
      config.lr = cls.lr;
      ClassifierTrainStats stats;
      const Classifier model = train_classifier(corpus, config, cls.seed, &stats);
      const fs::path out = cls.out.empty() ? dir / "classifier.ck" : dir / cls.out;
      model.save(out);
      std::printf("checkpoint %s holdout_accuracy %.4f\n", out.string().c_str(),
                  stats.holdout_accuracy);
      return 0;
    }

    if (*cmd_pre) {
      nlohmann::json cfg = {{"corpus", pre.corpus},
                            {"epochs", pre.epochs},
                            {"batch", pre.batch},
                            {"lr", pre.lr},
                            {"speakers", pre.speakers}};
      const fs::path dir = resolve_run_dir(pre.run_dir, "pretrain", json_hash(cfg), pre.seed);
      fs::create_directories(dir);
      const Corpus corpus = load_corpus(pre.corpus);
      TrainConfig config = TrainConfig::pretrain_defaults(pre.seed);
      config.epochs = pre.epochs;
      config.batch_size = pre.batch;
      config.lr = pre.lr;
      config.num_speakers = pre.speakers;
      TrainLogs logs;
      const AcousticModel model = pretrain_tts(corpus, config, &logs);
      model.save(dir / "pretrained.ck");
      write_train_log(dir / "train_log.jsonl", logs);
      std::printf("checkpoint %s\n", (dir / "pretrained.ck").string().c_str());
      return 0;
    }

    if (*cmd_ft) {
      nlohmann::json cfg = {{"stage", ft.stage}, {"steps", ft.steps}, {"batch", ft.batch},
                            {"lr", ft.lr},       {"mix", ft.mix},     {"beta", ft.beta},
                            {"gamma", ft.gamma}, {"lambda", ft.lambda}};
      const fs::path dir = resolve_run_dir(ft.run_dir, ft.stage, json_hash(cfg), ft.seed);
      fs::create_directories(dir);
      const AcousticModel pretrained = AcousticModel::load(ft.pretrained);
      const Corpus target = load_corpus(ft.target);
      Corpus multi;
      multi.inventory = target.inventory;
      if (!ft.multi.empty()) multi = load_corpus(ft.multi);
      const Classifier classifier = Classifier::load(ft.classifier, target.inventory);

      TrainConfig config = TrainConfig::finetune_defaults(stage_from_name(ft.stage), ft.seed);
      config.steps = ft.steps;
      config.batch_size = ft.batch;
      config.lr = ft.lr;
      config.mix_ratio = ft.mix;
      config.hp.beta = ft.beta;
      config.hp.gamma = ft.gamma;
      config.hp.lambda = ft.lambda;
      config.mask_silence = ft.mask_silence;
      TrainLogs logs;
      const AcousticModel tuned = finetune_tts(pretrained, target, multi, classifier, config,
                                               &logs);
      tuned.save(dir / (ft.stage + ".ck"));
      write_train_log(dir / "train_log.jsonl", logs);
      std::printf("checkpoint %s\n", (dir / (ft.stage + ".ck")).string().c_str());
      return 0;
    }

    if (*cmd_dur) {
      nlohmann::json cfg = {{"corpus", dur.corpus}, {"epochs", dur.epochs}};
      const fs::path dir = resolve_run_dir(dur.run_dir, "durations", json_hash(cfg), dur.seed);
      fs::create_directories(dir);
      const Corpus corpus = load_corpus(dur.corpus);
      const AcousticModel model = AcousticModel::load(dur.model, corpus.inventory);
      DurationConfig config;
      config.epochs = dur.epochs;
      const DurationModel dm = train_duration_model(model, corpus, config, dur.seed);
      dm.save(dir / "duration.ck");
      std::printf("checkpoint %s\n", (dir / "duration.ck").string().c_str());
      return 0;
    }

    if (*cmd_syn) {
      const AcousticModel model = AcousticModel::load(syn.model);
      const DurationModel dm = DurationModel::load(syn.durations);
      const TokenSequence tokens = parse_tokens(model.inventory(), syn.tokens);
      const MelSpectrogram mel = synthesize(model, dm, tokens, syn.speaker);
      write_mel(syn.out, mel.values);
      if (!syn.pgm.empty()) write_pgm(syn.pgm, mel.values);
      std::printf("mel %s frames %zu\n", syn.out.c_str(), mel.frames());
      return 0;
    }

    if (*cmd_ev) {
      const Corpus corpus = load_corpus(ev.corpus);
      const Classifier oracle = Classifier::load(ev.oracle, corpus.inventory);
      const Classifier trainer = Classifier::load(ev.train_classifier, corpus.inventory);

      std::set<int> impaired;
      if (corpus.metadata.contains("impairment")) {
        const auto imp = ImpairmentSpec::from_json(corpus.metadata.at("impairment"));
        impaired.insert(imp.impaired.begin(), imp.impaired.end());
      }
      std::vector<EvalItem> items;
      if (!ev.model.empty()) {
        require(!ev.durations.empty(), "evaluate: --model requires --durations");
        const AcousticModel model = AcousticModel::load(ev.model, corpus.inventory);
        const DurationModel dm = DurationModel::load(ev.durations);
        const int speaker = ev.speaker >= 0 ? ev.speaker : corpus.utterances.front().speaker;
        for (const auto& u : corpus.utterances) {
          const Matrix h = model.encode(u.tokens);
          const DurationSequence d = dm.predict(h, model.speaker_embedding(speaker).vec);
          items.push_back(
              {u.utt_id, model.forward(u.tokens, d, speaker), expand_labels(u.tokens, d)});
        }
      } else {
        for (const auto& u : corpus.utterances) {
          items.push_back({u.utt_id, u.mel, expand_labels(u.tokens, u.durations)});
        }
      }
      const FerBreakdown fer = evaluate_fer(oracle, items, impaired, trainer.param_hash(),
                                            nullptr);
      nlohmann::json out = {{"fer_total", fer.fer_total()},
                            {"fer_impaired", fer.fer_impaired()},
                            {"fer_clean", fer.fer_clean()},
                            {"frames", fer.frames_total},
                            {"errors", fer.err_total}};
      if (corpus.metadata.contains("language")) {
        const auto lang = ToyLanguageSpec::from_json(corpus.metadata.at("language"));
        const int spk = ev.speaker >= 0 ? ev.speaker : corpus.utterances.front().speaker;
        out["similarity"] = evaluate_speaker_similarity(items, lang, spk);
      }
      const std::string text = out.dump(2) + "\n";
      std::printf("%s", text.c_str());
      if (!ev.out.empty()) {
        std::ofstream os(ev.out);
        os << text;
      }
      return 0;
    }

    if (*cmd_rep) {
      const fs::path dir(rep.run_dir);
      const EvalReport report = read_report_json(dir / "report.json");
      write_report_csv(dir / "report.csv", report);
      print_report(report);
      return 0;
    }

    if (*cmd_ver) {
      std::vector<CheckResult> all;
      for (auto* battery : {verify_mle_equivalence, verify_loss_gradients, verify_sampler,
                            verify_loss_properties}) {
        const auto results = battery(ver.seed);
        all.insert(all.end(), results.begin(), results.end());
      }
      print_checks(all);
      return all_passed(all) ? 0 : kExitCriteria;
    }

    if (*cmd_rp) {
      ExperimentConfig cfg;
      cfg.pretrain_speakers = rp.speakers;
      cfg.sentences_per_speaker = rp.sentences;
      cfg.target_sentences = rp.target_sentences;
      cfg.eval_sentences = rp.eval_sentences;
      cfg.rho = rp.rho;
      cfg.classifier_epochs = rp.classifier_epochs;
      cfg.pretrain_epochs = rp.pretrain_epochs;
      cfg.finetune_steps = rp.finetune_steps;
      cfg.batch_size = rp.batch;
      cfg.mix_ratio = rp.mix;
      cfg.hp.beta = rp.beta;
      cfg.hp.gamma = rp.gamma;
      cfg.hp.lambda = rp.lambda;
      cfg.write_pgms = rp.pgms;
      const fs::path dir = resolve_run_dir(rp.run_dir, "reproduce", cfg.hash(), rp.seed);
      fs::create_directories(dir);
      std::printf("run dir: %s\n", dir.string().c_str());
      const ExperimentResult result = run_experiment(dir, rp.seed, cfg);
      print_report(result.report);
      auto checks = check_articulation_repair(result.report);
      const auto preserve = check_speaker_preservation(result.report);
      checks.insert(checks.end(), preserve.begin(), preserve.end());
      print_checks(checks);
      return all_passed(checks) ? 0 : kExitCriteria;
    }
  } catch (const ContractViolation& e) {
    return fail("contract-violation", e.what(), kExitContract);
  } catch (const MissingArtifactError& e) {
    return fail("missing-artifact", e.what(), kExitMissing);
  } catch (const IncompatibleError& e) {
    return fail("incompatible-artifact", e.what(), kExitIncompatible);
  } catch (const ManifestError& e) {
    return fail("corpus-data", e.what(), kExitCorpus);
  } catch (const ShapeError& e) {
    return fail("corpus-data", e.what(), kExitCorpus);
  } catch (const NonFiniteError& e) {
    return fail("corpus-data", e.what(), kExitCorpus);
  } catch (const InvariantError& e) {
    return fail("corpus-data", e.what(), kExitCorpus);
  } catch (const InsufficientDataError& e) {
    return fail("insufficient-data", e.what(), kExitInsufficient);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kExitInternal);
  }
  return 0;
}
