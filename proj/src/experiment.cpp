#include "artic/experiment.hpp"

#include <cmath>
#include <cstdio>

#include "artic/errors.hpp"
#include "artic/training.hpp"

namespace artic {

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["pretrain_speakers"] = pretrain_speakers;
  j["sentences_per_speaker"] = sentences_per_speaker;
  j["target_sentences"] = target_sentences;
  j["eval_sentences"] = eval_sentences;
  j["source_speaker"] = source_speaker;
  j["rho"] = rho;
  j["hp"] = {{"beta", hp.beta},
             {"gamma", hp.gamma},
             {"lambda", hp.lambda},
             {"sigma2", hp.sigma2},
             {"eps_floor", hp.eps_floor}};
  j["classifier_epochs"] = classifier_epochs;
  j["pretrain_epochs"] = pretrain_epochs;
  j["finetune_steps"] = finetune_steps;
  j["batch_size"] = batch_size;
  j["pretrain_lr"] = pretrain_lr;
  j["finetune_lr"] = finetune_lr;
  j["mix_ratio"] = mix_ratio;
  j["duration_epochs"] = duration_epochs;
  return j;
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string s = to_json().dump();
  return fnv1a(s.data(), s.size());
}

namespace {

std::vector<EvalItem> items_from_corpus(const Corpus& corpus) {
  std::vector<EvalItem> items;
  for (const auto& u : corpus.utterances) {
    items.push_back({u.utt_id, u.mel, expand_labels(u.tokens, u.durations)});
  }
  return items;
}

std::vector<EvalItem> items_from_synthesis(const AcousticModel& model, const DurationModel& dm,
                                           const Corpus& eval_corpus, int speaker,
                                           const std::string& tag) {
  std::vector<EvalItem> items;
  int idx = 0;
  for (const auto& u : eval_corpus.utterances) {
    const Matrix h = model.encode(u.tokens);
    const auto spk = model.speaker_embedding(speaker).vec;
    const DurationSequence d = dm.predict(h, spk);
    EvalItem item;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04d", tag.c_str(), idx++);
    item.utt_id = buf;
    item.mel = model.forward(u.tokens, d, speaker);
    item.labels = expand_labels(u.tokens, d);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace

ExperimentResult run_experiment(const std::filesystem::path& dir, std::uint64_t seed,
                                const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "corpora");
  fs::create_directories(dir / "checkpoints");

  const int target = cfg.target_speaker();
  const ToyLanguageSpec lang = default_language(cfg.pretrain_speakers + 1,
                                                derive_seed(seed, 1));
  ImpairmentSpec imp = default_impairment(lang, target);
  imp.rho = cfg.rho;

  // --- corpora ---------------------------------------------------------------
  std::vector<int> pretrain_speakers;
  for (int s = 0; s < cfg.pretrain_speakers; ++s) pretrain_speakers.push_back(s);
  const Corpus pretrain_corpus = generate_corpus(lang, pretrain_speakers,
                                                 cfg.sentences_per_speaker, std::nullopt,
                                                 derive_seed(seed, 2));
  const Corpus target_train = generate_corpus(lang, {target}, cfg.target_sentences, imp,
                                              derive_seed(seed, 3));
  const Corpus target_eval = generate_corpus(lang, {target}, cfg.eval_sentences, imp,
                                             derive_seed(seed, 4));
  const Corpus source_eval = rerender_clean(target_eval, lang, cfg.source_speaker,
                                            derive_seed(seed, 5));
  save_corpus(pretrain_corpus, dir / "corpora" / "pretrain");
  save_corpus(target_train, dir / "corpora" / "target_train");
  save_corpus(target_eval, dir / "corpora" / "target_eval");
  save_corpus(source_eval, dir / "corpora" / "source_eval");

  // --- classifiers (training-time + held-out oracle) --------------------------
  ClassifierConfig cls_cfg;
  cls_cfg.epochs = cfg.classifier_epochs;
  cls_cfg.batch_size = cfg.batch_size;
  ClassifierTrainStats cls_stats, oracle_stats;
  const Classifier classifier =
      train_classifier(pretrain_corpus, cls_cfg, derive_seed(seed, 6), &cls_stats);
  const Classifier oracle =
      train_classifier(pretrain_corpus, cls_cfg, derive_seed(seed, 7), &oracle_stats);
  require(classifier.param_hash() != oracle.param_hash(),
          "experiment: training classifier and oracle must differ");
  classifier.save(dir / "checkpoints" / "classifier.ck");
  oracle.save(dir / "checkpoints" / "oracle.ck");

  // --- acoustic pretraining ----------------------------------------------------
  TrainConfig pre = TrainConfig::pretrain_defaults(derive_seed(seed, 8));
  pre.epochs = cfg.pretrain_epochs;
  pre.batch_size = cfg.batch_size;
  pre.lr = cfg.pretrain_lr;
  pre.hp = cfg.hp;
  pre.num_speakers = cfg.pretrain_speakers + 1;  // reserve the target row
  TrainLogs pre_logs;
  const AcousticModel pretrained = pretrain_tts(pretrain_corpus, pre, &pre_logs);
  pretrained.save(dir / "checkpoints" / "pretrained.ck");
  write_train_log(dir / "pretrain_log.jsonl", pre_logs);

  DurationConfig dur_cfg;
  dur_cfg.epochs = cfg.duration_epochs;
  dur_cfg.batch_size = cfg.batch_size;
  const DurationModel durations =
      train_duration_model(pretrained, pretrain_corpus, dur_cfg, derive_seed(seed, 9));
  durations.save(dir / "checkpoints" / "duration.ck");

  // --- fine-tuning variants ----------------------------------------------------
  auto tune = [&](Stage stage, std::uint64_t s) {
    TrainConfig ft = TrainConfig::finetune_defaults(stage, s);
    ft.steps = cfg.finetune_steps;
    ft.batch_size = cfg.batch_size;
    ft.lr = cfg.finetune_lr;
    ft.hp = cfg.hp;
    if (stage != Stage::baseline_finetune) ft.mix_ratio = cfg.mix_ratio;
    TrainLogs logs;
    AcousticModel tuned =
        finetune_tts(pretrained, target_train, pretrain_corpus, classifier, ft, &logs);
    tuned.save(dir / "checkpoints" / (stage_name(stage) + ".ck"));
    write_train_log(dir / (stage_name(stage) + "_log.jsonl"), logs);
    return tuned;
  };
  const AcousticModel full = tune(Stage::finetune, derive_seed(seed, 10));
  const AcousticModel ablation = tune(Stage::ablation_no_reg, derive_seed(seed, 11));
  const AcousticModel baseline = tune(Stage::baseline_finetune, derive_seed(seed, 12));

  // --- evaluation ----------------------------------------------------------------
  std::vector<std::pair<std::string, std::vector<EvalItem>>> systems;
  systems.emplace_back(kRowSource, items_from_corpus(source_eval));
  systems.emplace_back(kRowTarget, items_from_corpus(target_eval));
  systems.emplace_back(kRowBaseline,
                       items_from_synthesis(baseline, durations, target_eval, target, "base"));
  systems.emplace_back(kRowAblation,
                       items_from_synthesis(ablation, durations, target_eval, target, "noreg"));
  systems.emplace_back(kRowFull,
                       items_from_synthesis(full, durations, target_eval, target, "full"));

  const std::set<int> impaired_set(imp.impaired.begin(), imp.impaired.end());
  nlohmann::json meta;
  meta["seed"] = seed;
  meta["config"] = cfg.to_json();
  meta["config_hash"] = cfg.hash();
  meta["classifier_seed"] = classifier.seed();
  meta["classifier_hash"] = classifier.param_hash();
  meta["classifier_holdout_accuracy"] = cls_stats.holdout_accuracy;
  meta["oracle_holdout_accuracy"] = oracle_stats.holdout_accuracy;
  meta["checkpoints"] = {{"pretrained", pretrained.param_hash()},
                         {"finetune-full", full.param_hash()},
                         {"finetune-no-reg", ablation.param_hash()},
                         {"baseline-finetune", baseline.param_hash()}};
  meta["impaired_phonemes"] = imp.impaired;

  // speaker-preservation sweep: the synthesized target voice scored against
  // every speaker's coloration
  for (const auto& name : {kRowFull, kRowBaseline}) {
    for (const auto& [sys_name, items] : systems) {
      if (sys_name != name) continue;
      nlohmann::json sims = nlohmann::json::array();
      for (int s = 0; s < lang.num_speakers(); ++s) {
        sims.push_back(evaluate_speaker_similarity(items, lang, s));
      }
      meta["similarity_vs_speakers"][name] = sims;
    }
  }

  EvalReport report = build_report(systems, oracle, lang, target, impaired_set,
                                   classifier.param_hash(), meta);

  ExperimentResult result;
  result.report = report;
  result.report_json = dir / "report.json";
  result.report_csv = dir / "report.csv";
  write_report_json(result.report_json, report);
  write_report_csv(result.report_csv, report);

  if (cfg.write_pgms) {
    fs::create_directories(dir / "mels");
    for (const auto& [name, items] : systems) {
      if (!items.empty()) {
        write_pgm(dir / "mels" / (name + std::string(".pgm")), items.front().mel.values);
      }
    }
  }
  return result;
}

namespace {

const SystemRow& row(const EvalReport& report, const std::string& name) {
  for (const auto& r : report.rows) {
    if (r.name == name) return r;
  }
  throw MissingArtifactError("report: missing row '" + name + "'");
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

}  // namespace

std::vector<CheckResult> check_articulation_repair(const EvalReport& report) {
  std::vector<CheckResult> out;
  const double rec_imp = row(report, kRowTarget).fer.fer_impaired();
  const double base_imp = row(report, kRowBaseline).fer.fer_impaired();
  const double full_imp = row(report, kRowFull).fer.fer_impaired();
  const double abl_imp = row(report, kRowAblation).fer.fer_impaired();
  const double base_clean = row(report, kRowBaseline).fer.fer_clean();
  const double full_clean = row(report, kRowFull).fer.fer_clean();

  out.push_back({"recordings-impaired-fer", rec_imp >= 0.50,
                 fmt("impaired recordings FER = %.3f (>= 0.50)", rec_imp)});
  out.push_back({"baseline-retains-impairment", std::abs(base_imp - rec_imp) <= 0.15,
                 fmt("baseline %.3f vs recordings %.3f (within 0.15)", base_imp, rec_imp)});
  out.push_back({"full-repairs-impairment", full_imp <= 0.5 * base_imp,
                 fmt("full %.3f <= half of baseline %.3f", full_imp, base_imp)});
  const bool abl_between = abl_imp >= full_imp - 1e-12 && abl_imp <= base_imp + 1e-12;
  const bool abl_close = std::abs(abl_imp - full_imp) <= 0.02;
  out.push_back({"ablation-ordering", abl_between || abl_close,
                 fmt("ablation %.3f vs full %.3f (between full and baseline, or within 0.02)",
                     abl_imp, full_imp)});
  out.push_back({"clean-fer-preserved", std::abs(full_clean - base_clean) <= 0.03,
                 fmt("clean FER full %.3f vs baseline %.3f (within 0.03)", full_clean,
                     base_clean)});
  return out;
}

std::vector<CheckResult> check_speaker_preservation(const EvalReport& report) {
  std::vector<CheckResult> out;
  const double sim_full = row(report, kRowFull).similarity;
  const double sim_base = row(report, kRowBaseline).similarity;
  out.push_back({"similarity-close-to-baseline", std::abs(sim_full - sim_base) <= 0.05,
                 fmt("full %.4f vs baseline %.4f (within 0.05)", sim_full, sim_base)});

  bool target_best = true;
  double best_other = -1.0;
  const auto& sims = report.metadata.at("similarity_vs_speakers").at(kRowFull);
  const int target = report.metadata.at("config").at("pretrain_speakers").get<int>();
  for (int s = 0; s < static_cast<int>(sims.size()); ++s) {
    if (s == target) continue;
    const double v = sims.at(static_cast<std::size_t>(s)).get<double>();
    best_other = std::max(best_other, v);
    if (v >= sim_full) target_best = false;
  }
  out.push_back({"similarity-target-exceeds-others", target_best,
                 fmt("target %.4f > best other %.4f", sim_full, best_other)});
  return out;
}

}  // namespace artic
