#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "artic/errors.hpp"
#include "artic/evaluation.hpp"

using namespace artic;
namespace fs = std::filesystem;

namespace {

struct EvalWorld {
  ToyLanguageSpec lang = default_language(4, 500);
  Classifier oracle;
  Classifier trainer;

  EvalWorld() : oracle(make(501)), trainer(make(502)) {}

  Classifier make(std::uint64_t seed) {
    const auto corpus = generate_corpus(lang, {0, 1, 2, 3}, 16, std::nullopt, 503);
    ClassifierConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 8;
    return train_classifier(corpus, cfg, seed, nullptr);
  }

  std::vector<EvalItem> clean_items(int speaker, int sentences, std::uint64_t seed) const {
    const auto corpus = generate_corpus(lang, {speaker}, sentences, std::nullopt, seed);
    std::vector<EvalItem> items;
    for (const auto& u : corpus.utterances) {
      items.push_back({u.utt_id, u.mel, expand_labels(u.tokens, u.durations)});
    }
    return items;
  }
};

}  // namespace

TEST_CASE("fer refuses the training-time classifier and splits by impaired set") {
  EvalWorld w;
  const auto items = w.clean_items(0, 8, 600);
  const std::set<int> impaired = {w.lang.inventory.index_of("kk")};

  CHECK_THROWS_AS(
      evaluate_fer(w.oracle, items, impaired, w.oracle.param_hash(), nullptr),
      ContractViolation);

  std::vector<UtteranceFer> per_utt;
  const auto fer = evaluate_fer(w.oracle, items, impaired, w.trainer.param_hash(), &per_utt);
  CHECK(fer.frames_total == fer.frames_impaired + fer.frames_clean);
  CHECK(fer.err_total == fer.err_impaired + fer.err_clean);
  CHECK(fer.fer_total() >= 0.0);
  CHECK(fer.fer_total() <= 1.0);
  CHECK(per_utt.size() == items.size());

  // rates recompute exactly from per-frame records
  long frames = 0, errs = 0;
  for (const auto& u : per_utt) {
    frames += u.frames;
    errs += u.errors;
  }
  CHECK(frames == fer.frames_total);
  CHECK(errs == fer.err_total);

  // clean recordings are recognized well by the held-out oracle
  CHECK(fer.fer_total() <= 0.10);

  // determinism and frame-permutation invariance
  const auto fer2 = evaluate_fer(w.oracle, items, impaired, w.trainer.param_hash(), nullptr);
  CHECK(fer2.err_total == fer.err_total);
  auto reversed = items;
  for (auto& item : reversed) {
    Matrix flipped(item.mel.values.rows(), item.mel.values.cols());
    std::vector<int> labels(item.labels.ids.rbegin(), item.labels.ids.rend());
    for (std::size_t t = 0; t < flipped.rows(); ++t) {
      for (std::size_t c = 0; c < flipped.cols(); ++c) {
        flipped(t, c) = item.mel.values(item.mel.values.rows() - 1 - t, c);
      }
    }
    item.mel.values = flipped;
    item.labels.ids = labels;
  }
  // NOTE: the oracle is convolutional, so only the frame/label pairing must be
  // preserved; total frame counts stay identical
  const auto fer3 = evaluate_fer(w.oracle, reversed, impaired, w.trainer.param_hash(), nullptr);
  CHECK(fer3.frames_total == fer.frames_total);
}

TEST_CASE("perfect posteriors give zero FER") {
  EvalWorld w;
  // craft a single-frame item whose oracle argmax we then use as its label
  auto items = w.clean_items(1, 2, 601);
  for (auto& item : items) {
    const Matrix logits = w.oracle.logits(item.mel.values);
    for (std::size_t t = 0; t < logits.rows(); ++t) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < logits.cols(); ++k) {
        if (logits(t, k) > logits(t, best)) best = k;
      }
      item.labels.ids[t] = static_cast<int>(best);
    }
  }
  const auto fer = evaluate_fer(w.oracle, items, {}, w.trainer.param_hash(), nullptr);
  CHECK(fer.err_total == 0);
  CHECK(fer.fer_total() == 0.0);
}

TEST_CASE("speaker similarity recovers the generating coloration") {
  EvalWorld w;
  const auto items = w.clean_items(2, 30, 602);
  const double self = evaluate_speaker_similarity(items, w.lang, 2);
  CHECK(self >= 0.99);

  // every other speaker scores lower, with a clear gap
  for (int s = 0; s < 4; ++s) {
    if (s == 2) continue;
    const double other = evaluate_speaker_similarity(items, w.lang, s);
    CHECK(other < self);
    CHECK(self - other >= 0.1);
  }
}

TEST_CASE("similarity error paths") {
  EvalWorld w;
  // too few frames per phoneme
  std::vector<EvalItem> tiny;
  {
    const auto corpus = generate_corpus(w.lang, {0}, 1, std::nullopt, 603);
    const auto& u = corpus.utterances.front();
    EvalItem item{u.utt_id, u.mel, expand_labels(u.tokens, u.durations)};
    // keep only the first 4 frames
    Matrix cut(4, u.mel.bins());
    for (std::size_t t = 0; t < 4; ++t) {
      for (std::size_t c = 0; c < u.mel.bins(); ++c) cut(t, c) = u.mel.values(t, c);
    }
    item.mel.values = cut;
    item.labels.ids.resize(4);
    tiny.push_back(std::move(item));
  }
  CHECK_THROWS_AS(evaluate_speaker_similarity(tiny, w.lang, 0), InsufficientDataError);

  // constant-zero mels -> degenerate estimate
  auto zeros = w.clean_items(0, 10, 604);
  for (auto& item : zeros) item.mel.values.fill(0.0);
  CHECK_THROWS_AS(evaluate_speaker_similarity(zeros, w.lang, 0), InsufficientDataError);
}

TEST_CASE("report assembly, rendering, and recomputation") {
  EvalWorld w;
  const std::set<int> impaired = {w.lang.inventory.index_of("tt")};
  std::vector<std::pair<std::string, std::vector<EvalItem>>> systems;
  systems.emplace_back("rows-a", w.clean_items(0, 6, 605));
  systems.emplace_back("rows-b", w.clean_items(1, 6, 606));

  nlohmann::json meta;
  meta["seed"] = 605;
  const auto report = build_report(systems, w.oracle, w.lang, 0, impaired,
                                   w.trainer.param_hash(), meta);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].name == "rows-a");  // row order follows configuration
  CHECK(report.rows[1].name == "rows-b");
  CHECK(report.header.find("FER") != std::string::npos);

  const auto dir = fs::temp_directory_path() / "artic_report_test";
  fs::create_directories(dir);
  write_report_json(dir / "report.json", report);
  write_report_csv(dir / "report.csv", report);

  const auto loaded = read_report_json(dir / "report.json");
  REQUIRE(loaded.rows.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(loaded.rows[i].fer.err_total == report.rows[i].fer.err_total);
    CHECK(loaded.rows[i].similarity == report.rows[i].similarity);
    // rates recompute exactly from stored counts
    long frames = 0, errs = 0, fi = 0, ei = 0;
    for (const auto& u : loaded.rows[i].per_utterance) {
      frames += u.frames;
      errs += u.errors;
      fi += u.frames_impaired;
      ei += u.err_impaired;
    }
    CHECK(frames == loaded.rows[i].fer.frames_total);
    CHECK(errs == loaded.rows[i].fer.err_total);
    CHECK(fi == loaded.rows[i].fer.frames_impaired);
    CHECK(ei == loaded.rows[i].fer.err_impaired);
  }

  // mismatched evaluation sets are rejected
  systems[1].second.pop_back();
  CHECK_THROWS_AS(build_report(systems, w.oracle, w.lang, 0, impaired,
                               w.trainer.param_hash(), meta),
                  ContractViolation);
  fs::remove_all(dir);
}

TEST_CASE("pgm dump writes a parseable image") {
  Rng rng(607);
  const Matrix mel = rng.gauss_matrix(12, 6, 1.0);
  const auto path = fs::temp_directory_path() / "artic_mel.pgm";
  write_pgm(path, mel);
  std::ifstream is(path, std::ios::binary);
  std::string magic;
  is >> magic;
  CHECK(magic == "P5");
  std::size_t width, height, maxval;
  is >> width >> height >> maxval;
  CHECK(width == 12);
  CHECK(height == 6);
  CHECK(maxval == 255);
  is.get();
  std::vector<char> pixels(width * height);
  is.read(pixels.data(), static_cast<std::streamsize>(pixels.size()));
  CHECK(is.gcount() == static_cast<std::streamsize>(pixels.size()));
  fs::remove(path);
}
