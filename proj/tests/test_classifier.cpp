#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "artic/classifier.hpp"
#include "artic/errors.hpp"
#include "artic/simulator.hpp"

using namespace artic;

namespace {

// small clean corpus for fast training tests: 4 speakers x 24 sentences
Corpus small_corpus(int speakers = 4, int sentences = 24, std::uint64_t seed = 5) {
  const auto lang = default_language(speakers, seed);
  std::vector<int> ids;
  for (int s = 0; s < speakers; ++s) ids.push_back(s);
  return generate_corpus(lang, ids, sentences, std::nullopt, seed + 1);
}

}  // namespace

TEST_CASE("posteriors are row-stochastic and length preserving") {
  const auto inv = PhonemeInventory::create({"sil", "a", "b", "c"}, "sil");
  const auto cls = Classifier::random_init(inv, 8, 99);
  Rng rng(1);
  for (std::size_t T : {1, 2, 3, 17, 64, 512}) {
    MelSpectrogram mel{rng.gauss_matrix(T, 8, 3.0)};
    const auto post = cls.infer_posteriors(mel);
    REQUIRE(post.frames() == T);
    REQUIRE(post.classes() == 4);
    CHECK_NOTHROW(post.validate(1e-6));
  }
  // arbitrary finite inputs, including large magnitudes
  MelSpectrogram hot{rng.gauss_matrix(9, 8, 1e3)};
  CHECK_NOTHROW(cls.infer_posteriors(hot).validate(1e-6));
}

TEST_CASE("classifier forward is deterministic and dims are checked") {
  const auto inv = PhonemeInventory::create({"sil", "a", "b"}, "sil");
  const auto cls = Classifier::random_init(inv, 6, 7);
  Rng rng(2);
  MelSpectrogram mel{rng.gauss_matrix(12, 6, 1.0)};
  const auto a = cls.infer_posteriors(mel);
  const auto b = cls.infer_posteriors(mel);
  CHECK(a.probs == b.probs);
  MelSpectrogram bad{rng.gauss_matrix(4, 5, 1.0)};
  CHECK_THROWS_AS(cls.infer_posteriors(bad), ContractViolation);
}

TEST_CASE("gather_truth") {
  FramePosteriors post;
  post.probs = Matrix(2, 3);
  post.probs(0, 0) = 0.7; post.probs(0, 1) = 0.2; post.probs(0, 2) = 0.1;
  post.probs(1, 0) = 0.1; post.probs(1, 1) = 0.8; post.probs(1, 2) = 0.1;
  ExpandedLabels labels{{0, 1}};
  const auto out = gather_truth(post, labels);
  CHECK(out[0] == doctest::Approx(0.7));
  CHECK(out[1] == doctest::Approx(0.8));

  // one-hot rows matching labels give all ones
  FramePosteriors hot;
  hot.probs = Matrix(2, 3, 0.0);
  hot.probs(0, 2) = 1.0;
  hot.probs(1, 0) = 1.0;
  const auto ones = gather_truth(hot, {{2, 0}});
  CHECK(ones == std::vector<double>{1.0, 1.0});

  // uniform rows with K=13 give 1/13
  FramePosteriors uni;
  uni.probs = Matrix(1, 13, 1.0 / 13.0);
  CHECK(gather_truth(uni, {{5}})[0] == doctest::Approx(0.07692307692307693).epsilon(1e-12));

  CHECK_THROWS_AS(gather_truth(post, {{0}}), ContractViolation);
  CHECK_THROWS_AS(gather_truth(post, {{0, 9}}), ContractViolation);
}

TEST_CASE("training reaches high held-out frame accuracy on a clean toy corpus") {
  const auto corpus = small_corpus();
  ClassifierConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 16;
  ClassifierTrainStats stats;
  const auto cls = train_classifier(corpus, cfg, 31, &stats);
  INFO("holdout accuracy = ", stats.holdout_accuracy);
  CHECK(stats.holdout_accuracy >= 0.95);
  CHECK(stats.holdout_frames > 0);

  // clean frames from a phoneme's template get that argmax, cross-checked
  // against the nearest-template oracle
  const auto lang = default_language(4, 5);
  Rng rng(77);
  int agree = 0, total = 0;
  for (const auto& u : corpus.utterances) {
    if (u.speaker != 0 || total > 400) break;
    const auto labels = expand_labels(u.tokens, u.durations);
    const auto post = cls.infer_posteriors(u.mel);
    for (std::size_t t = 0; t < labels.size(); ++t) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < post.classes(); ++k) {
        if (post.probs(t, k) > post.probs(t, best)) best = k;
      }
      const int oracle = nearest_template(lang, u.speaker, u.mel.values.row(t));
      agree += (static_cast<int>(best) == oracle) ? 1 : 0;
      ++total;
    }
  }
  CHECK(static_cast<double>(agree) / static_cast<double>(total) >= 0.95);
}

TEST_CASE("single-phoneme corpus is learned perfectly") {
  const auto lang = default_language(1, 9);
  const int aa = lang.inventory.index_of("aa");
  Corpus corpus;
  corpus.inventory = lang.inventory;
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    Utterance u;
    u.utt_id = "c" + std::to_string(i);
    u.speaker = 0;
    u.tokens.ids = {aa, aa, aa};
    u.durations.frames = {3, 4, 3};
    u.mel.values = Matrix(10, 20);
    for (std::size_t t = 0; t < 10; ++t) {
      for (std::size_t m = 0; m < 20; ++m) {
        u.mel.values(t, m) = lang.colorations(0, m) * lang.templates(aa, m) + 0.05 * rng.gauss();
      }
    }
    u.mel.values = quantize_f32(u.mel.values);
    corpus.utterances.push_back(std::move(u));
  }
  ClassifierConfig cfg;
  cfg.epochs = 8;
  cfg.batch_size = 8;
  ClassifierTrainStats stats;
  train_classifier(corpus, cfg, 17, &stats);
  CHECK(stats.holdout_accuracy == doctest::Approx(1.0));
}

TEST_CASE("inventory / dimension mismatches are rejected") {
  const auto corpus = small_corpus(2, 4);
  ClassifierConfig cfg;
  cfg.epochs = 1;
  cfg.expected_classes = 7;  // corpus has 13
  CHECK_THROWS_AS(train_classifier(corpus, cfg, 1, nullptr), IncompatibleError);
  cfg.expected_classes = 0;
  cfg.expected_bins = 10;  // corpus has 20
  CHECK_THROWS_AS(train_classifier(corpus, cfg, 1, nullptr), IncompatibleError);
  Corpus empty;
  empty.inventory = corpus.inventory;
  CHECK_THROWS_AS(train_classifier(empty, ClassifierConfig{}, 1, nullptr), ContractViolation);
}

TEST_CASE("training is reproducible bitwise") {
  const auto corpus = small_corpus(2, 6);
  ClassifierConfig cfg;
  cfg.epochs = 2;
  const auto a = train_classifier(corpus, cfg, 123, nullptr);
  const auto b = train_classifier(corpus, cfg, 123, nullptr);
  CHECK(a.param_hash() == b.param_hash());
  const auto c = train_classifier(corpus, cfg, 124, nullptr);
  CHECK(a.param_hash() != c.param_hash());
}

TEST_CASE("checkpoint round-trip and inventory guard") {
  namespace fs = std::filesystem;
  const auto corpus = small_corpus(2, 4);
  ClassifierConfig cfg;
  cfg.epochs = 1;
  const auto cls = train_classifier(corpus, cfg, 55, nullptr);
  const auto path = fs::temp_directory_path() / "artic_cls_test.ck";
  cls.save(path);
  const auto loaded = Classifier::load(path);
  CHECK(loaded.param_hash() == cls.param_hash());
  CHECK(loaded.seed() == cls.seed());

  const auto other = PhonemeInventory::create({"sil", "x"}, "sil");
  CHECK_THROWS_AS(Classifier::load(path, other), IncompatibleError);
  CHECK_NOTHROW(Classifier::load(path, corpus.inventory));
  fs::remove(path);
}

TEST_CASE("gathered posteriors are differentiable w.r.t. the mel input") {
  const auto inv = PhonemeInventory::create({"sil", "a", "b"}, "sil");
  auto cls = Classifier::random_init(inv, 5, 21);
  Rng rng(4);
  Matrix mel = rng.gauss_matrix(2, 5, 1.0);
  const std::vector<int> labels = {1, 2};

  auto mel_node = ad::input(mel);
  auto lp = ad::log_softmax_gather(cls.logits_graph_frozen(mel_node), labels, -1e30);
  auto root = ad::neg_sum(lp);
  ad::backward(root);

  const double h = 1e-5;
  double max_rel = 0.0;
  for (std::size_t i = 0; i < mel.size(); ++i) {
    Matrix probe = mel;
    probe.data()[i] += h;
    ExpandedLabels el{labels};
    const double fp = -std::log(gather_truth(cls.infer_posteriors({probe}), el)[0]) -
                      std::log(gather_truth(cls.infer_posteriors({probe}), el)[1]);
    probe.data()[i] = mel.data()[i] - h;
    const double fm = -std::log(gather_truth(cls.infer_posteriors({probe}), el)[0]) -
                      std::log(gather_truth(cls.infer_posteriors({probe}), el)[1]);
    const double fd = (fp - fm) / (2.0 * h);
    const double an = root ? mel_node->grad().data()[i] : 0.0;
    max_rel = std::max(max_rel, std::abs(an - fd) / std::max(std::abs(fd), 1e-8));
  }
  CHECK(max_rel < 1e-3);
}
