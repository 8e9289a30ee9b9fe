#pragma once

#include <map>
#include <optional>
#include <vector>

#include "artic/corpus.hpp"
#include "artic/rng.hpp"
#include "artic/types.hpp"

namespace artic {

// Fully synthetic "toy language": each phoneme owns a fixed M-bin spectral
// template (two Gaussian bumps; confusable pairs share the primary bump),
// each speaker a fixed multiplicative gain vector (smooth spectral tilt plus
// per-bin jitter). Frames are coloration * template + isotropic noise.
struct ToyLanguageSpec {
  PhonemeInventory inventory;
  Matrix templates;    // K x M; silence row is all zeros
  Matrix colorations;  // S x M, indexed by speaker id
  double noise_scale = 0.07;
  std::vector<std::pair<int, int>> duration_range;  // per phoneme, within [2,8]
  int sentence_min = 4;   // non-silence tokens per sentence
  int sentence_max = 12;

  int num_speakers() const { return static_cast<int>(colorations.rows()); }
  int mel_bins() const { return static_cast<int>(templates.cols()); }

  // Enforces template separability: min pairwise distance >= 4 * noise_scale.
  void validate() const;

  nlohmann::json to_json() const;
  static ToyLanguageSpec from_json(const nlohmann::json& j);
};

enum class ImpairmentMode { substitution, eq1_sampled };

struct ImpairmentSpec {
  int target_speaker = -1;
  ImpairmentMode mode = ImpairmentMode::substitution;
  std::vector<int> impaired;            // phoneme indices; silence excluded
  std::map<int, int> confusable;        // substitution target per impaired phoneme
  double rho = 0.85;                    // blend factor toward the confusable template
  double alpha = 5.0;                   // eq1_sampled severity
  double sigma2 = 0.05;                 // eq1_sampled variance

  void validate(const PhonemeInventory& inv) const;

  nlohmann::json to_json() const;
  static ImpairmentSpec from_json(const nlohmann::json& j);
};

// The default 13-class (12 phonemes + silence), 20-bin language with
// `num_speakers` colorations drawn from `seed`.
ToyLanguageSpec default_language(int num_speakers, std::uint64_t seed);

// Default impairment: three phonemes (velar / alveolar stop / high vowel
// analogues) substituted toward their voiced / lax confusables.
ImpairmentSpec default_impairment(const ToyLanguageSpec& lang, int target_speaker);

// Deterministic given (specs, seed); per-utterance streams are derived from
// (seed, speaker, index) so corpora are reproducible bit for bit.
Corpus generate_corpus(const ToyLanguageSpec& lang, const std::vector<int>& speakers,
                       int sentences_per_speaker,
                       const std::optional<ImpairmentSpec>& impairment, std::uint64_t seed);

// One exact draw from the normalized impairment density around y_clean_frame:
// the radius r satisfies r^2 ~ Gamma((alpha+M)/2, 2*sigma2) and the direction
// is uniform on the M-sphere.
std::vector<double> sample_impaired_frame(const std::vector<double>& y_clean_frame, double alpha,
                                          double sigma2, std::uint64_t seed);
std::vector<double> sample_impaired_frame(const std::vector<double>& y_clean_frame, double alpha,
                                          double sigma2, Rng& rng);

// Test oracle: argmin_k || frame - coloration(speaker) * template_k ||.
int nearest_template(const ToyLanguageSpec& lang, int speaker, const double* frame);

// Re-renders the same sentences (tokens and durations) through another
// speaker's clean process; the "same content, different voice" analogue.
Corpus rerender_clean(const Corpus& source, const ToyLanguageSpec& lang, int speaker,
                      std::uint64_t seed);

}  // namespace artic
