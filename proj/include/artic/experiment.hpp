#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "artic/evaluation.hpp"
#include "artic/verify.hpp"

namespace artic {

// Knobs of the default end-to-end experiment: 8 clean pretraining speakers
// plus 1 target speaker whose velar/alveolar-stop/high-vowel analogues are
// substituted toward their confusables at blend 0.85.
struct ExperimentConfig {
  int pretrain_speakers = 8;
  int sentences_per_speaker = 200;
  int target_sentences = 60;
  int eval_sentences = 30;
  int source_speaker = 0;  // renders the clean same-content reference set
  double rho = 0.85;
  HyperParams hp;

  int classifier_epochs = 30;
  int pretrain_epochs = 60;
  int finetune_steps = 750;
  int batch_size = 32;
  double pretrain_lr = 1e-3;
  double finetune_lr = 1e-4;
  double mix_ratio = 0.5;
  int duration_epochs = 40;
  bool write_pgms = false;

  int target_speaker() const { return pretrain_speakers; }

  nlohmann::json to_json() const;
  std::uint64_t hash() const;
};

// System row names, in report order.
inline constexpr const char* kRowSource = "recordings-clean-source";
inline constexpr const char* kRowTarget = "recordings-impaired-target";
inline constexpr const char* kRowBaseline = "baseline-finetune";
inline constexpr const char* kRowAblation = "finetune-no-reg";
inline constexpr const char* kRowFull = "finetune-full";

struct ExperimentResult {
  EvalReport report;
  std::filesystem::path report_json;
  std::filesystem::path report_csv;
};

// Runs the whole pipeline under `dir`: corpora, two classifiers (training +
// held-out oracle), pretraining, duration model, the three fine-tuning
// variants, synthesis of the held-out sentences, and the comparison report.
// Fully deterministic given (config, seed).
ExperimentResult run_experiment(const std::filesystem::path& dir, std::uint64_t seed,
                                const ExperimentConfig& config);

// Articulation-repair ordering and speaker-preservation checks on one
// finished report (single seed).
std::vector<CheckResult> check_articulation_repair(const EvalReport& report);
std::vector<CheckResult> check_speaker_preservation(const EvalReport& report);

}  // namespace artic
