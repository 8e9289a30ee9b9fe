#include "artic/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "artic/errors.hpp"
#include "artic/loss.hpp"

namespace artic {

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::pretrain: return "pretrain";
    case Stage::finetune: return "finetune";
    case Stage::baseline_finetune: return "baseline-finetune";
    case Stage::ablation_no_reg: return "ablation-no-reg";
  }
  return "?";
}

Stage stage_from_name(const std::string& name) {
  if (name == "pretrain") return Stage::pretrain;
  if (name == "finetune") return Stage::finetune;
  if (name == "baseline-finetune") return Stage::baseline_finetune;
  if (name == "ablation-no-reg") return Stage::ablation_no_reg;
  throw ContractViolation("unknown stage '" + name + "'");
}

void TrainConfig::validate() const {
  require(batch_size > 0, "train config: batch size must be positive");
  require(lr > 0.0, "train config: lr must be positive");
  require(mix_ratio >= 0.0 && mix_ratio <= 1.0, "train config: mix ratio out of [0,1]");
  require(holdout_fraction >= 0.0 && holdout_fraction < 1.0,
          "train config: holdout fraction out of range");
  require(checkpoint_every >= 0, "train config: checkpoint cadence must be >= 0");
  hp.validate();
  if (stage == Stage::pretrain) {
    require(epochs > 0, "train config: pretraining needs epochs > 0");
  } else {
    require(steps > 0, "train config: fine-tuning needs steps > 0");
  }
}

double TrainConfig::effective_beta() const {
  return stage == Stage::finetune ? hp.beta : 0.0;
}

double TrainConfig::effective_gamma() const {
  return (stage == Stage::finetune || stage == Stage::ablation_no_reg) ? hp.gamma : 0.0;
}

TrainConfig TrainConfig::pretrain_defaults(std::uint64_t seed) {
  TrainConfig c;
  c.stage = Stage::pretrain;
  c.epochs = 60;
  c.batch_size = 32;
  c.lr = 1e-3;
  c.seed = seed;
  return c;
}

TrainConfig TrainConfig::finetune_defaults(Stage stage, std::uint64_t seed) {
  require(stage != Stage::pretrain, "finetune_defaults: not a fine-tune stage");
  TrainConfig c;
  c.stage = stage;
  c.steps = 750;
  c.batch_size = 32;
  c.lr = 1e-4;
  c.mix_ratio = stage == Stage::baseline_finetune ? 0.0 : 0.5;
  c.seed = seed;
  return c;
}

namespace {

std::vector<double> frame_weights_for(const Utterance& u, const ExpandedLabels& labels,
                                      int silence_index, bool mask_silence) {
  if (!mask_silence) return {};
  std::vector<double> w(labels.size(), 1.0);
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels.ids[t] == silence_index) w[t] = 0.0;
  }
  (void)u;
  return w;
}

}  // namespace

AcousticModel pretrain_tts(const Corpus& corpus, const TrainConfig& config, TrainLogs* logs) {
  config.validate();
  require(config.stage == Stage::pretrain, "pretrain_tts: config stage must be pretrain");
  require(!corpus.utterances.empty(), "pretrain_tts: empty corpus");

  std::set<int> speakers;
  int max_speaker = 0;
  for (const auto& u : corpus.utterances) {
    speakers.insert(u.speaker);
    max_speaker = std::max(max_speaker, u.speaker);
  }
  if (speakers.size() < 2) {
    std::fprintf(stderr, "warning: pretraining corpus has a single speaker; "
                         "the speaker table will be degenerate\n");
  }
  const int num_speakers = std::max(config.num_speakers, max_speaker + 1);
  const int bins = static_cast<int>(corpus.utterances.front().mel.bins());

  AcousticModel model = AcousticModel::random_init(corpus.inventory, bins, num_speakers,
                                                   AcousticDims{}, config.seed);
  auto params = model.all_params();
  nn::Adam opt(config.lr);
  Rng shuffle_rng(derive_seed(config.seed, 0x9E7A14));

  // deterministic per-speaker tail holdout for the epoch curve
  std::vector<std::size_t> train_idx, holdout_idx;
  {
    std::map<int, std::vector<std::size_t>> by_speaker;
    for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
      by_speaker[corpus.utterances[i].speaker].push_back(i);
    }
    for (auto& [spk, idxs] : by_speaker) {
      const std::size_t held =
          static_cast<std::size_t>(config.holdout_fraction * static_cast<double>(idxs.size()));
      for (std::size_t j = 0; j < idxs.size(); ++j) {
        (j + held >= idxs.size() ? holdout_idx : train_idx).push_back(idxs[j]);
      }
    }
  }
  require(!train_idx.empty(), "pretrain_tts: no training utterances after holdout");

  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(0, static_cast<long>(i) - 1)]);
    }
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      nn::zero_grads(params);
      long batch_frames = 0;
      for (std::size_t i = start; i < end; ++i) {
        batch_frames += static_cast<long>(corpus.utterances[order[i]].mel.frames());
      }
      double rec_sum = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const Utterance& u = corpus.utterances[order[i]];
        const auto labels = expand_labels(u.tokens, u.durations);
        auto y = model.forward_graph(u.tokens, u.durations, u.speaker, true, true);
        auto l_rec = ad::sum_sq_diff(
            std::move(y), u.mel.values,
            frame_weights_for(u, labels, corpus.inventory.silence_index, config.mask_silence));
        rec_sum += l_rec->val()(0, 0);
        ad::backward(l_rec, 1.0 / static_cast<double>(batch_frames));
      }
      opt.step(params);
      ++step;
      if (logs) {
        LossBreakdown lb;
        lb.l_rec = rec_sum / static_cast<double>(batch_frames);
        lb.l_total = lb.l_rec;
        lb.frame_count = batch_frames;
        logs->steps.push_back({step, stage_name(config.stage), lb});
      }
    }
    if (logs) {
      double rec = 0.0;
      long frames = 0;
      for (std::size_t i : holdout_idx) {
        const Utterance& u = corpus.utterances[i];
        const MelSpectrogram y = model.forward(u.tokens, u.durations, u.speaker);
        rec += reconstruction_loss(u.mel, y);
        frames += static_cast<long>(u.mel.frames());
      }
      logs->holdout_rec_per_epoch.push_back(frames > 0 ? rec / static_cast<double>(frames)
                                                       : 0.0);
    }
  }
  return model;
}

AcousticModel finetune_tts(const AcousticModel& pretrained, const Corpus& target,
                           const Corpus& multispeaker, const Classifier& frozen_classifier,
                           const TrainConfig& config, TrainLogs* logs) {
  config.validate();
  require(config.stage != Stage::pretrain, "finetune_tts: config stage must be a fine-tune stage");
  require(!target.utterances.empty(), "finetune_tts: empty target corpus");

  const std::uint64_t inv_hash = pretrained.inventory().hash();
  if (target.inventory.hash() != inv_hash) {
    throw IncompatibleError("finetune_tts: target corpus inventory mismatch");
  }
  if (frozen_classifier.inventory().hash() != inv_hash) {
    throw IncompatibleError("finetune_tts: classifier inventory mismatch");
  }
  if (frozen_classifier.mel_bins() != pretrained.mel_bins()) {
    throw IncompatibleError("finetune_tts: classifier mel bins mismatch");
  }

  const int n_multi_per_batch =
      static_cast<int>(std::lround(config.mix_ratio * config.batch_size));
  if (n_multi_per_batch > 0) {
    require(!multispeaker.utterances.empty(),
            "finetune_tts: mixing requested but multi-speaker corpus is empty");
    if (multispeaker.inventory.hash() != inv_hash) {
      throw IncompatibleError("finetune_tts: multi-speaker corpus inventory mismatch");
    }
  }

  AcousticModel model = pretrained;  // value copy; the caller keeps the original
  auto trainable = model.decoder_params();
  nn::Adam opt(config.lr);
  Rng pick_rng(derive_seed(config.seed, 0xF17E));

  const double beta = config.effective_beta();
  const double gamma = config.effective_gamma();
  const bool need_classifier = beta > 0.0 || gamma > 0.0;
  const double ln_floor = std::log(config.hp.eps_floor);

  for (long step = 1; step <= config.steps; ++step) {
    // exact split keeps the multi-speaker share at the configured ratio
    std::vector<const Utterance*> batch;
    for (int i = 0; i < config.batch_size - n_multi_per_batch; ++i) {
      batch.push_back(&target.utterances[static_cast<std::size_t>(
          pick_rng.uniform_int(0, static_cast<long>(target.utterances.size()) - 1))]);
    }
    for (int i = 0; i < n_multi_per_batch; ++i) {
      batch.push_back(&multispeaker.utterances[static_cast<std::size_t>(
          pick_rng.uniform_int(0, static_cast<long>(multispeaker.utterances.size()) - 1))]);
    }

    long batch_frames = 0;
    for (const Utterance* u : batch) batch_frames += static_cast<long>(u->mel.frames());

    nn::zero_grads(trainable);
    double rec_sum = 0.0, reg_sum = 0.0, consis_sum = 0.0;
    for (const Utterance* u : batch) {
      const auto labels = expand_labels(u->tokens, u->durations);
      const auto fw =
          frame_weights_for(*u, labels, target.inventory.silence_index, config.mask_silence);

      auto y = model.forward_graph(u->tokens, u->durations, u->speaker, false, true);
      std::vector<ad::NodeP> terms;
      std::vector<double> coeffs;
      auto l_rec = ad::sum_sq_diff(y, u->mel.values, fw);
      rec_sum += l_rec->val()(0, 0);
      terms.push_back(std::move(l_rec));
      coeffs.push_back(1.0);

      if (need_classifier) {
        if (beta > 0.0) {
          // severity weights from the truth-label posteriors on reference speech
          const auto p_star =
              gather_truth(frozen_classifier.infer_posteriors(u->mel), labels);
          auto w = severity_weights(p_star, config.hp.lambda).alpha;
          if (!fw.empty()) {
            for (std::size_t t = 0; t < w.size(); ++t) w[t] *= fw[t];
          }
          auto l_reg = ad::log_dist_penalty(y, u->mel.values, std::move(w), config.hp.eps_floor);
          reg_sum += l_reg->val()(0, 0);
          terms.push_back(std::move(l_reg));
          coeffs.push_back(beta);
        }
        if (gamma > 0.0) {
          auto logits = frozen_classifier.logits_graph_frozen(y);
          auto logp = ad::log_softmax_gather(std::move(logits), labels.ids, ln_floor);
          auto l_consis = ad::neg_sum(std::move(logp), fw);
          consis_sum += l_consis->val()(0, 0);
          terms.push_back(std::move(l_consis));
          coeffs.push_back(gamma);
        }
      }
      auto total = ad::lin_comb(std::move(terms), std::move(coeffs));
      ad::backward(total, 1.0 / static_cast<double>(batch_frames));
    }
    opt.step(trainable);

    if (logs) {
      LossBreakdown lb;
      const double n = static_cast<double>(batch_frames);
      lb.l_rec = rec_sum / n;
      lb.l_reg = reg_sum / n;
      lb.l_consis = consis_sum / n;
      lb.beta = beta;
      lb.gamma = gamma;
      lb.l_total = lb.l_rec + beta * lb.l_reg + gamma * lb.l_consis;
      lb.frame_count = batch_frames;
      StepRecord rec{step, stage_name(config.stage), lb, n_multi_per_batch,
                     static_cast<long>(batch.size())};
      logs->steps.push_back(std::move(rec));
    }
  }
  return model;
}

MelSpectrogram synthesize(const AcousticModel& model, const DurationModel& durations,
                          const TokenSequence& tokens, int speaker) {
  const Matrix h = model.encode(tokens);
  const auto spk = model.speaker_embedding(speaker).vec;
  const DurationSequence d = durations.predict(h, spk);
  return model.forward(tokens, d, speaker);
}

void write_train_log(const std::filesystem::path& path, const TrainLogs& logs) {
  std::ofstream os(path);
  if (!os) throw Error("write_train_log: cannot open " + path.string());
  for (const auto& rec : logs.steps) {
    nlohmann::json j;
    j["step"] = rec.step;
    j["stage"] = rec.stage;
    j["l_rec"] = rec.loss.l_rec;
    j["l_reg"] = rec.loss.l_reg;
    j["l_consis"] = rec.loss.l_consis;
    j["l_total"] = rec.loss.l_total;
    j["frames"] = rec.loss.frame_count;
    os << j.dump() << "\n";
  }
}

}  // namespace artic
