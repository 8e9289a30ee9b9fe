#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "artic/classifier.hpp"
#include "artic/simulator.hpp"
#include "artic/types.hpp"

namespace artic {

// Frame error counts, split by whether the ground-truth label belongs to the
// impaired phoneme set. Rates always recompute exactly from the counts.
struct FerBreakdown {
  long frames_total = 0;
  long frames_impaired = 0;
  long frames_clean = 0;
  long err_total = 0;
  long err_impaired = 0;
  long err_clean = 0;

  double fer_total() const;
  double fer_impaired() const;
  double fer_clean() const;
};

struct EvalItem {
  std::string utt_id;
  MelSpectrogram mel;
  ExpandedLabels labels;
};

struct UtteranceFer {
  std::string utt_id;
  long frames = 0;
  long errors = 0;
  long frames_impaired = 0;
  long err_impaired = 0;
};

// FER against ground-truth expanded labels using the held-out oracle
// classifier. Refuses to run with the classifier that took part in training
// (same parameter hash), so results can never be self-confirmed.
FerBreakdown evaluate_fer(const Classifier& oracle, const std::vector<EvalItem>& items,
                          const std::set<int>& impaired_labels,
                          std::uint64_t training_classifier_hash,
                          std::vector<UtteranceFer>* per_utterance = nullptr);

// Recovers the multiplicative speaker coloration from frames via per-phoneme
// least squares against the language templates, then scores it by cosine
// against the given speaker's true coloration, clamped to [0,1]. Phonemes
// with fewer than 10 frames are excluded; fewer than 3 usable phonemes or a
// degenerate estimate raise InsufficientDataError.
double evaluate_speaker_similarity(const std::vector<EvalItem>& items,
                                   const ToyLanguageSpec& lang, int speaker);

struct SystemRow {
  std::string name;
  FerBreakdown fer;
  double similarity = 0.0;  // vs the target speaker's coloration
  long utterances = 0;
  std::vector<UtteranceFer> per_utterance;
};

struct EvalReport {
  std::string header;
  std::vector<SystemRow> rows;
  nlohmann::json metadata;
};

// Evaluates every system on its items (all systems must share the held-out
// sentence set) and assembles the comparison table. Row order follows the
// `systems` order. Similarity is scored against `target_speaker`.
EvalReport build_report(const std::vector<std::pair<std::string, std::vector<EvalItem>>>& systems,
                        const Classifier& oracle, const ToyLanguageSpec& lang, int target_speaker,
                        const std::set<int>& impaired_labels,
                        std::uint64_t training_classifier_hash, nlohmann::json metadata);

void write_report_json(const std::filesystem::path& path, const EvalReport& report);
void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report_json(const std::filesystem::path& path);

// Grayscale spectrogram image (binary PGM, frequency bins bottom-up).
void write_pgm(const std::filesystem::path& path, const Matrix& mel);

}  // namespace artic
