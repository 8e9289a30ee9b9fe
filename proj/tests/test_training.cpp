#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "artic/errors.hpp"
#include "artic/simulator.hpp"
#include "artic/training.hpp"

using namespace artic;

namespace {

struct TinyWorld {
  ToyLanguageSpec lang = default_language(4, 314);
  Corpus multi;
  Corpus target;
  Classifier classifier;

  TinyWorld()
      : multi(generate_corpus(lang, {0, 1, 2}, 10, std::nullopt, 315)),
        target(generate_corpus(lang, {3}, 8, default_impairment(lang, 3), 316)),
        classifier(make_classifier()) {}

  Classifier make_classifier() {
    ClassifierConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    return train_classifier(multi, cfg, 317, nullptr);
  }

  TrainConfig pretrain_cfg() const {
    TrainConfig c = TrainConfig::pretrain_defaults(271);
    c.epochs = 2;
    c.batch_size = 8;
    c.num_speakers = 4;
    return c;
  }

  TrainConfig finetune_cfg(Stage stage) const {
    TrainConfig c = TrainConfig::finetune_defaults(stage, 272);
    c.steps = 6;
    c.batch_size = 8;
    return c;
  }
};

}  // namespace

TEST_CASE("train config validation and stage-effective weights") {
  TrainConfig c = TrainConfig::pretrain_defaults(1);
  CHECK_NOTHROW(c.validate());
  c.mix_ratio = 1.5;
  CHECK_THROWS_AS(c.validate(), ContractViolation);

  const auto full = TrainConfig::finetune_defaults(Stage::finetune, 1);
  CHECK(full.effective_beta() == doctest::Approx(0.05));
  CHECK(full.effective_gamma() == doctest::Approx(0.3));
  const auto ablation = TrainConfig::finetune_defaults(Stage::ablation_no_reg, 1);
  CHECK(ablation.effective_beta() == 0.0);  // forced beta = 0
  CHECK(ablation.effective_gamma() == doctest::Approx(0.3));
  const auto baseline = TrainConfig::finetune_defaults(Stage::baseline_finetune, 1);
  CHECK(baseline.effective_beta() == 0.0);
  CHECK(baseline.effective_gamma() == 0.0);
  CHECK(baseline.mix_ratio == 0.0);

  CHECK(stage_from_name("ablation-no-reg") == Stage::ablation_no_reg);
  CHECK_THROWS_AS(stage_from_name("nope"), ContractViolation);
}

TEST_CASE("pretraining is bit-reproducible and logs pure reconstruction") {
  const TinyWorld w;
  TrainLogs logs1, logs2;
  const auto m1 = pretrain_tts(w.multi, w.pretrain_cfg(), &logs1);
  const auto m2 = pretrain_tts(w.multi, w.pretrain_cfg(), &logs2);
  CHECK(m1.param_hash() == m2.param_hash());
  REQUIRE(!logs1.steps.empty());
  for (const auto& rec : logs1.steps) {
    CHECK(rec.loss.l_reg == 0.0);
    CHECK(rec.loss.l_consis == 0.0);
    CHECK(rec.loss.l_total == doctest::Approx(rec.loss.l_rec));
  }
  CHECK(logs1.holdout_rec_per_epoch.size() == 2);

  // a different seed changes the outcome
  TrainConfig other = w.pretrain_cfg();
  other.seed = 999;
  const auto m3 = pretrain_tts(w.multi, other, nullptr);
  CHECK(m1.param_hash() != m3.param_hash());
}

TEST_CASE("single-speaker pretraining corpus is accepted") {
  const TinyWorld w;
  const auto solo = generate_corpus(w.lang, {0}, 6, std::nullopt, 400);
  TrainConfig cfg = w.pretrain_cfg();
  cfg.num_speakers = 1;
  CHECK_NOTHROW(pretrain_tts(solo, cfg, nullptr));  // warning only
}

TEST_CASE("fine-tuning freezes encoder and classifier bit-exactly") {
  TinyWorld w;
  const auto pretrained = pretrain_tts(w.multi, w.pretrain_cfg(), nullptr);
  const auto encoder_before = pretrained.encoder_hash();
  const auto classifier_before = w.classifier.param_hash();

  TrainLogs logs;
  const auto tuned =
      finetune_tts(pretrained, w.target, w.multi, w.classifier, w.finetune_cfg(Stage::finetune),
                   &logs);

  CHECK(tuned.encoder_hash() == encoder_before);            // frozen encoder
  CHECK(w.classifier.param_hash() == classifier_before);    // frozen classifier
  CHECK(tuned.param_hash() != pretrained.param_hash());     // decoder moved
  REQUIRE(logs.steps.size() == 6);

  // logged breakdown recomposes within 1e-9
  for (const auto& rec : logs.steps) {
    const double recomposed =
        rec.loss.l_rec + rec.loss.beta * rec.loss.l_reg + rec.loss.gamma * rec.loss.l_consis;
    CHECK(std::abs(recomposed - rec.loss.l_total) <= 1e-9);
    CHECK(rec.loss.l_consis > 0.0);
  }
}

TEST_CASE("fine-tuning is reproducible and stage weights act as documented") {
  TinyWorld w;
  const auto pretrained = pretrain_tts(w.multi, w.pretrain_cfg(), nullptr);

  TrainLogs a_logs, b_logs;
  const auto a = finetune_tts(pretrained, w.target, w.multi, w.classifier,
                              w.finetune_cfg(Stage::finetune), &a_logs);
  const auto b = finetune_tts(pretrained, w.target, w.multi, w.classifier,
                              w.finetune_cfg(Stage::finetune), &b_logs);
  CHECK(a.param_hash() == b.param_hash());

  TrainLogs base_logs;
  finetune_tts(pretrained, w.target, w.multi, w.classifier,
               w.finetune_cfg(Stage::baseline_finetune), &base_logs);
  for (const auto& rec : base_logs.steps) {
    CHECK(rec.loss.l_reg == 0.0);
    CHECK(rec.loss.l_consis == 0.0);
    CHECK(rec.multi_samples == 0);  // baseline trains on target data only
  }

  TrainLogs abl_logs;
  finetune_tts(pretrained, w.target, w.multi, w.classifier,
               w.finetune_cfg(Stage::ablation_no_reg), &abl_logs);
  for (const auto& rec : abl_logs.steps) {
    CHECK(rec.loss.l_reg == 0.0);      // no regularization term
    CHECK(rec.loss.l_consis > 0.0);    // consistency still on
  }
}

TEST_CASE("mixing ratio holds over consecutive steps") {
  TinyWorld w;
  const auto pretrained = pretrain_tts(w.multi, w.pretrain_cfg(), nullptr);
  TrainConfig cfg = w.finetune_cfg(Stage::finetune);
  cfg.steps = 100;
  cfg.mix_ratio = 0.5;
  TrainLogs logs;
  finetune_tts(pretrained, w.target, w.multi, w.classifier, cfg, &logs);
  long multi = 0, total = 0;
  for (const auto& rec : logs.steps) {
    multi += rec.multi_samples;
    total += rec.batch_samples;
  }
  const double frac = static_cast<double>(multi) / static_cast<double>(total);
  CHECK(std::abs(frac - 0.5) <= 0.05);
}

TEST_CASE("incompatible artifacts are rejected") {
  TinyWorld w;
  const auto pretrained = pretrain_tts(w.multi, w.pretrain_cfg(), nullptr);

  // classifier trained on a different inventory
  const auto other_lang = default_language(2, 999);
  ToyLanguageSpec small = other_lang;
  small.inventory = PhonemeInventory::create({"sil", "q", "w"}, "sil");
  small.templates = Matrix(3, 20);
  for (std::size_t m = 0; m < 20; ++m) {
    small.templates(1, m) = other_lang.templates(1, m);
    small.templates(2, m) = other_lang.templates(5, m);
  }
  small.duration_range = {{2, 4}, {2, 5}, {2, 5}};
  const auto small_corpus = generate_corpus(small, {0}, 6, std::nullopt, 1000);
  ClassifierConfig ccfg;
  ccfg.epochs = 1;
  const auto bad_classifier = train_classifier(small_corpus, ccfg, 1001, nullptr);

  CHECK_THROWS_AS(finetune_tts(pretrained, w.target, w.multi, bad_classifier,
                               w.finetune_cfg(Stage::finetune), nullptr),
                  IncompatibleError);
  CHECK_THROWS_AS(finetune_tts(pretrained, small_corpus, w.multi, w.classifier,
                               w.finetune_cfg(Stage::finetune), nullptr),
                  IncompatibleError);
}

TEST_CASE("synthesize emits the predicted duration sum deterministically") {
  TinyWorld w;
  const auto model = pretrain_tts(w.multi, w.pretrain_cfg(), nullptr);
  DurationConfig dcfg;
  dcfg.epochs = 4;
  const auto dm = train_duration_model(model, w.multi, dcfg, 55);

  TokenSequence tokens{{0, 1, 5, 2}};
  const auto mel1 = synthesize(model, dm, tokens, 1);
  const auto mel2 = synthesize(model, dm, tokens, 1);
  CHECK(mel1.values == mel2.values);
  const auto d = dm.predict(model.encode(tokens), model.speaker_embedding(1).vec);
  CHECK(static_cast<long>(mel1.frames()) == d.total());
}

TEST_CASE("train log file has one record per step") {
  namespace fs = std::filesystem;
  TinyWorld w;
  TrainLogs logs;
  pretrain_tts(w.multi, w.pretrain_cfg(), &logs);
  const auto path = fs::temp_directory_path() / "artic_train_log.jsonl";
  write_train_log(path, logs);
  std::ifstream is(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(is, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("step"));
    CHECK(j.at("stage") == "pretrain");
    CHECK(j.contains("l_rec"));
    CHECK(j.contains("l_reg"));
    CHECK(j.contains("l_consis"));
    CHECK(j.contains("l_total"));
    ++lines;
  }
  CHECK(lines == logs.steps.size());
  fs::remove(path);
}
