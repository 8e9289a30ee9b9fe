#pragma once

#include <filesystem>
#include <vector>

#include "artic/corpus.hpp"
#include "artic/nn.hpp"
#include "artic/types.hpp"

namespace artic {

struct AcousticDims {
  int token_emb = 32;
  int hidden = 64;
  int spk_emb = 16;
};

// Mel prediction network. Token ids are embedded and encoded by a stride-free
// convolution stack into per-token hidden states, replicated per duration to
// frame rate, concatenated with the speaker embedding, and decoded into M-bin
// frames. Output frame count always equals the duration sum.
class AcousticModel {
 public:
  static AcousticModel random_init(const PhonemeInventory& inv, int mel_bins, int num_speakers,
                                   const AcousticDims& dims, std::uint64_t seed);

  Matrix encode(const TokenSequence& tokens) const;  // N x hidden
  static Matrix length_regulate(const Matrix& hidden, const DurationSequence& durations);
  MelSpectrogram forward(const TokenSequence& tokens, const DurationSequence& durations,
                         int speaker) const;

  // Graph for training. Encoder side (token embedding + encoder convs) and
  // decoder side (decoder convs + speaker table) can be trainable
  // independently; fine-tuning freezes the encoder side.
  ad::NodeP forward_graph(const TokenSequence& tokens, const DurationSequence& durations,
                          int speaker, bool train_encoder, bool train_decoder);

  const PhonemeInventory& inventory() const { return inv_; }
  const AcousticDims& dims() const { return dims_; }
  int mel_bins() const { return bins_; }
  int num_speakers() const { return n_speakers_; }
  std::uint64_t seed() const { return seed_; }

  SpeakerEmbedding speaker_embedding(int speaker) const;

  std::vector<nn::Param*> encoder_params();
  std::vector<nn::Param*> decoder_params();  // decoder convs + speaker table
  std::vector<nn::Param*> all_params();
  std::uint64_t encoder_hash() const;
  std::uint64_t param_hash() const;

  void save(const std::filesystem::path& path) const;
  static AcousticModel load(const std::filesystem::path& path);
  static AcousticModel load(const std::filesystem::path& path, const PhonemeInventory& expected);

 private:
  AcousticModel() = default;
  void check_speaker(int speaker) const;

  PhonemeInventory inv_;
  AcousticDims dims_;
  int bins_ = 0;
  int n_speakers_ = 0;
  std::uint64_t seed_ = 0;

  nn::Param token_emb_;  // K x token_emb
  nn::Param spk_emb_;    // S x spk_emb
  nn::ConvLayer e1_, e2_;
  nn::ConvLayer d1_, d2_, d3_;
};

struct DurationConfig {
  int epochs = 40;
  int batch_size = 32;
  double lr = 1e-2;

  void validate() const;
};

// Per-token log-duration regressor on encoder hidden states plus the speaker
// embedding. Inference clamps predictions to >= 1 frame.
class DurationModel {
 public:
  static DurationModel random_init(const AcousticDims& dims, std::uint64_t seed);

  // hidden: N x hidden, spk: the speaker's embedding vector.
  std::vector<double> predict_log_durations(const Matrix& hidden,
                                            const std::vector<double>& spk) const;
  DurationSequence predict(const Matrix& hidden, const std::vector<double>& spk) const;

  std::vector<nn::Param*> params();
  std::uint64_t param_hash() const;

  void save(const std::filesystem::path& path) const;
  static DurationModel load(const std::filesystem::path& path);

  const AcousticDims& dims() const { return dims_; }

 private:
  DurationModel() = default;
  friend DurationModel train_duration_model(const AcousticModel&, const Corpus&,
                                            const DurationConfig&, std::uint64_t);

  AcousticDims dims_;
  std::uint64_t seed_ = 0;
  nn::ConvLayer c1_;    // (hidden + spk_emb) -> 32, width 3
  nn::ConvLayer head_;  // 32 -> 1, width 1
};

// Squared error on log durations against corpus ground truth; the encoder is
// used frozen.
DurationModel train_duration_model(const AcousticModel& model, const Corpus& corpus,
                                   const DurationConfig& config, std::uint64_t seed);

// Inference-side duration clamp: round(exp(log_duration)), never below 1 frame.
int clamp_duration(double log_duration);

}  // namespace artic
