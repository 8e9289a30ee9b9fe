#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "artic/matrix.hpp"

namespace artic {

// Ordered phoneme vocabulary including exactly one silence symbol. Indices
// are stable across save/load; classifier class k == inventory index k.
struct PhonemeInventory {
  std::vector<std::string> symbols;
  int silence_index = -1;

  static PhonemeInventory create(std::vector<std::string> symbols,
                                 const std::string& silence_symbol);

  int size() const { return static_cast<int>(symbols.size()); }
  int index_of(const std::string& symbol) const;  // throws if absent
  void validate() const;
  std::uint64_t hash() const;  // FNV-1a over symbols and silence index
};

struct TokenSequence {
  std::vector<int> ids;
  std::size_t size() const { return ids.size(); }
};

struct DurationSequence {
  std::vector<int> frames;
  std::size_t size() const { return frames.size(); }
  long total() const;
};

// T x M matrix of log-mel-like frame features.
struct MelSpectrogram {
  Matrix values;
  std::size_t frames() const { return values.rows(); }
  std::size_t bins() const { return values.cols(); }
};

struct SpeakerEmbedding {
  int id = -1;
  std::vector<double> vec;
};

// T x K row-stochastic per-frame class probabilities.
struct FramePosteriors {
  Matrix probs;
  std::size_t frames() const { return probs.rows(); }
  std::size_t classes() const { return probs.cols(); }
  void validate(double tol = 1e-6) const;
};

// Per-frame phoneme labels, aligned with a T-frame spectrogram.
struct ExpandedLabels {
  std::vector<int> ids;
  std::size_t size() const { return ids.size(); }
};

struct Utterance {
  std::string utt_id;
  int speaker = -1;
  TokenSequence tokens;
  DurationSequence durations;
  MelSpectrogram mel;
  // Ground-truth corruption marker, corpus metadata only; never used by losses.
  std::optional<std::vector<std::uint8_t>> impaired_mask;

  void validate(int num_classes) const;  // throws InvariantError naming utt_id
};

struct HyperParams {
  double beta = 0.05;
  double gamma = 0.3;
  double lambda = 25.0;
  double sigma2 = 1.0;
  double eps_floor = 1e-8;

  void validate() const;
};

struct LossBreakdown {
  double l_rec = 0.0;
  double l_reg = 0.0;
  double l_consis = 0.0;
  double l_total = 0.0;
  double beta = 0.0;   // weights used, kept for recomposition checks
  double gamma = 0.0;
  long frame_count = 0;
};

// Replicates each token id over its duration span: ([a,b],[2,3]) -> [a,a,b,b,b].
ExpandedLabels expand_labels(const TokenSequence& tokens, const DurationSequence& durations);

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace artic
