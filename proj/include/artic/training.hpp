#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "artic/acoustic.hpp"
#include "artic/classifier.hpp"
#include "artic/corpus.hpp"
#include "artic/types.hpp"

namespace artic {

enum class Stage { pretrain, finetune, baseline_finetune, ablation_no_reg };

std::string stage_name(Stage s);
Stage stage_from_name(const std::string& name);

struct TrainConfig {
  Stage stage = Stage::pretrain;
  int epochs = 60;        // pretraining
  int steps = 750;        // fine-tuning
  int batch_size = 32;
  double lr = 1e-3;
  HyperParams hp;
  double mix_ratio = 0.5;  // fraction of multi-speaker samples per fine-tune batch
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0: final checkpoint only
  bool mask_silence = false; // exclude silence frames from all three losses
  double holdout_fraction = 0.05;
  int num_speakers = 0;      // 0: infer from corpus; set larger to reserve rows

  void validate() const;

  // Stage-effective loss weights; baseline zeroes both, the ablation zeroes
  // beta. hp itself keeps its positive defaults.
  double effective_beta() const;
  double effective_gamma() const;

  static TrainConfig pretrain_defaults(std::uint64_t seed);
  static TrainConfig finetune_defaults(Stage stage, std::uint64_t seed);
};

struct StepRecord {
  long step = 0;
  std::string stage;
  LossBreakdown loss;
  long multi_samples = 0;  // multi-speaker share of the batch (fine-tuning)
  long batch_samples = 0;
};

struct TrainLogs {
  std::vector<StepRecord> steps;
  std::vector<double> holdout_rec_per_epoch;  // pretraining only
};

// Multi-speaker pretraining with the plain reconstruction loss; all
// parameters train. A single-speaker corpus is accepted with a warning.
AcousticModel pretrain_tts(const Corpus& corpus, const TrainConfig& config,
                           TrainLogs* logs = nullptr);

// Target-speaker fine-tuning with the full loss. Every batch holds an exact
// mix_ratio share of clean multi-speaker utterances. Only decoder convs and
// the speaker table update; the encoder side and the classifier stay
// bit-identical.
AcousticModel finetune_tts(const AcousticModel& pretrained, const Corpus& target,
                           const Corpus& multispeaker, const Classifier& frozen_classifier,
                           const TrainConfig& config, TrainLogs* logs = nullptr);

// Inference path: durations from the duration model, then the decoder.
MelSpectrogram synthesize(const AcousticModel& model, const DurationModel& durations,
                          const TokenSequence& tokens, int speaker);

// Line-delimited records: {"step","stage","l_rec","l_reg","l_consis","l_total","frames"}.
void write_train_log(const std::filesystem::path& path, const TrainLogs& logs);

}  // namespace artic
