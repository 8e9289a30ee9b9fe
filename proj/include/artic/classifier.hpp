#pragma once

#include <filesystem>
#include <vector>

#include "artic/corpus.hpp"
#include "artic/nn.hpp"
#include "artic/types.hpp"

namespace artic {

struct ClassifierConfig {
  int epochs = 30;
  int batch_size = 32;
  double lr = 1e-3;
  double holdout_fraction = 0.1;  // per-speaker tail split used for accuracy
  // When nonzero, the corpus must match; guards against training on the
  // wrong inventory.
  int expected_classes = 0;
  int expected_bins = 0;

  void validate() const;
};

// Frame-level phone classifier: three width-5 temporal convolution blocks
// (stride 1, same padding, tanh) and a per-frame softmax head. Output length
// always equals input length.
class Classifier {
 public:
  static Classifier random_init(const PhonemeInventory& inv, int mel_bins, std::uint64_t seed);

  FramePosteriors infer_posteriors(const MelSpectrogram& mel) const;
  Matrix logits(const Matrix& mel) const;

  // Graph fragment mel -> logits. trainable=false freezes the weights so
  // gradients flow only into the mel input.
  ad::NodeP logits_graph(ad::NodeP mel, bool trainable);
  ad::NodeP logits_graph_frozen(const ad::NodeP& mel) const;

  const PhonemeInventory& inventory() const { return inv_; }
  int mel_bins() const { return bins_; }
  int classes() const { return inv_.size(); }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t param_hash() const;

  std::vector<nn::Param*> params();

  void save(const std::filesystem::path& path) const;
  static Classifier load(const std::filesystem::path& path);
  // Refuses checkpoints whose inventory hash differs.
  static Classifier load(const std::filesystem::path& path, const PhonemeInventory& expected);

 private:
  Classifier() = default;

  PhonemeInventory inv_;
  int bins_ = 0;
  std::uint64_t seed_ = 0;
  nn::ConvLayer c1_, c2_, c3_, head_;
};

struct ClassifierTrainStats {
  std::vector<double> epoch_ce;  // mean per-frame cross entropy per epoch
  double holdout_accuracy = 0.0;
  long holdout_frames = 0;
};

Classifier train_classifier(const Corpus& corpus, const ClassifierConfig& config,
                            std::uint64_t seed, ClassifierTrainStats* stats = nullptr);

// out[t] = posteriors[t, labels[t]] — the truth-label posterior sequence.
std::vector<double> gather_truth(const FramePosteriors& posteriors, const ExpandedLabels& labels);

}  // namespace artic
