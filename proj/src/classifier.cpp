#include "artic/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "artic/errors.hpp"

namespace artic {

namespace {
constexpr int kHidden = 64;
constexpr int kKernel = 5;
}  // namespace

void ClassifierConfig::validate() const {
  require(epochs > 0 && batch_size > 0, "classifier config: counts must be positive");
  require(lr > 0.0, "classifier config: lr must be positive");
  require(holdout_fraction >= 0.0 && holdout_fraction < 1.0,
          "classifier config: holdout fraction out of range");
}

Classifier Classifier::random_init(const PhonemeInventory& inv, int mel_bins,
                                   std::uint64_t seed) {
  inv.validate();
  require(mel_bins >= 1, "classifier: mel_bins must be >= 1");
  Classifier c;
  c.inv_ = inv;
  c.bins_ = mel_bins;
  c.seed_ = seed;
  Rng rng(derive_seed(seed, 0xC1A55));
  c.c1_ = nn::ConvLayer::init(mel_bins, kHidden, kKernel, rng);
  c.c2_ = nn::ConvLayer::init(kHidden, kHidden, kKernel, rng);
  c.c3_ = nn::ConvLayer::init(kHidden, kHidden, kKernel, rng);
  c.head_ = nn::ConvLayer::init(kHidden, inv.size(), 1, rng);
  return c;
}

Matrix Classifier::logits(const Matrix& mel) const {
  require(mel.cols() == static_cast<std::size_t>(bins_), "classifier: mel bin mismatch");
  Matrix h = c1_.forward(mel);
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = std::tanh(h.data()[i]);
  h = c2_.forward(h);
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = std::tanh(h.data()[i]);
  h = c3_.forward(h);
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = std::tanh(h.data()[i]);
  return head_.forward(h);
}

FramePosteriors Classifier::infer_posteriors(const MelSpectrogram& mel) const {
  FramePosteriors out;
  out.probs = nn::softmax_rows(logits(mel.values));
  return out;
}

ad::NodeP Classifier::logits_graph(ad::NodeP mel, bool trainable) {
  auto h = ad::tanh_(c1_.graph(std::move(mel), trainable));
  h = ad::tanh_(c2_.graph(std::move(h), trainable));
  h = ad::tanh_(c3_.graph(std::move(h), trainable));
  return head_.graph(std::move(h), trainable);
}

ad::NodeP Classifier::logits_graph_frozen(const ad::NodeP& mel) const {
  auto h = ad::tanh_(c1_.graph_frozen(mel));
  h = ad::tanh_(c2_.graph_frozen(h));
  h = ad::tanh_(c3_.graph_frozen(h));
  return head_.graph_frozen(h);
}

std::vector<nn::Param*> Classifier::params() {
  return {&c1_.W, &c1_.b, &c2_.W, &c2_.b, &c3_.W, &c3_.b, &head_.W, &head_.b};
}

std::uint64_t Classifier::param_hash() const {
  return nn::params_hash({&c1_.W, &c1_.b, &c2_.W, &c2_.b, &c3_.W, &c3_.b, &head_.W, &head_.b});
}

void Classifier::save(const std::filesystem::path& path) const {
  nlohmann::json meta;
  meta["kind"] = "classifier";
  meta["inventory"] = {{"symbols", inv_.symbols},
                       {"silence", inv_.symbols[inv_.silence_index]}};
  meta["inventory_hash"] = inv_.hash();
  meta["mel_bins"] = bins_;
  meta["classes"] = inv_.size();
  meta["seed"] = seed_;
  nn::save_checkpoint(path, meta,
                      {{"c1.W", &c1_.W.w},
                       {"c1.b", &c1_.b.w},
                       {"c2.W", &c2_.W.w},
                       {"c2.b", &c2_.b.w},
                       {"c3.W", &c3_.W.w},
                       {"c3.b", &c3_.b.w},
                       {"head.W", &head_.W.w},
                       {"head.b", &head_.b.w}});
}

Classifier Classifier::load(const std::filesystem::path& path) {
  auto ck = nn::load_checkpoint(path);
  if (ck.meta.value("kind", "") != "classifier") {
    throw IncompatibleError("classifier: checkpoint kind mismatch");
  }
  auto inv = PhonemeInventory::create(
      ck.meta.at("inventory").at("symbols").get<std::vector<std::string>>(),
      ck.meta.at("inventory").at("silence").get<std::string>());
  Classifier c = random_init(inv, ck.meta.at("mel_bins").get<int>(),
                             ck.meta.at("seed").get<std::uint64_t>());
  c.c1_.W.w = ck.get("c1.W");
  c.c1_.b.w = ck.get("c1.b");
  c.c2_.W.w = ck.get("c2.W");
  c.c2_.b.w = ck.get("c2.b");
  c.c3_.W.w = ck.get("c3.W");
  c.c3_.b.w = ck.get("c3.b");
  c.head_.W.w = ck.get("head.W");
  c.head_.b.w = ck.get("head.b");
  return c;
}

Classifier Classifier::load(const std::filesystem::path& path, const PhonemeInventory& expected) {
  auto ck = nn::load_checkpoint(path);
  if (ck.meta.value("inventory_hash", std::uint64_t{0}) != expected.hash()) {
    throw IncompatibleError("classifier: checkpoint inventory does not match");
  }
  return load(path);
}

std::vector<double> gather_truth(const FramePosteriors& posteriors, const ExpandedLabels& labels) {
  require(labels.size() == posteriors.frames(), "gather_truth: length mismatch");
  std::vector<double> out(labels.size());
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const int lab = labels.ids[t];
    require(lab >= 0 && static_cast<std::size_t>(lab) < posteriors.classes(),
            "gather_truth: label out of range");
    out[t] = posteriors.probs(t, static_cast<std::size_t>(lab));
  }
  return out;
}

Classifier train_classifier(const Corpus& corpus, const ClassifierConfig& config,
                            std::uint64_t seed, ClassifierTrainStats* stats) {
  config.validate();
  require(!corpus.utterances.empty(), "train_classifier: empty corpus");
  if (config.expected_classes != 0 && config.expected_classes != corpus.inventory.size()) {
    throw IncompatibleError("train_classifier: corpus classes do not match config");
  }
  const int bins = static_cast<int>(corpus.utterances.front().mel.bins());
  if (config.expected_bins != 0 && config.expected_bins != bins) {
    throw IncompatibleError("train_classifier: corpus mel bins do not match config");
  }

  // deterministic per-speaker tail holdout
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
  require(!train_idx.empty(), "train_classifier: no training utterances after holdout");

  Classifier model = Classifier::random_init(corpus.inventory, bins, seed);
  auto params = model.params();
  nn::Adam opt(config.lr);
  Rng shuffle_rng(derive_seed(seed, 0x50FF1E));

  if (stats) stats->epoch_ce.clear();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(0, static_cast<long>(i) - 1)]);
    }
    double epoch_loss = 0.0;
    long epoch_frames = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      nn::zero_grads(params);
      long batch_frames = 0;
      for (std::size_t i = start; i < end; ++i) {
        batch_frames += static_cast<long>(corpus.utterances[order[i]].mel.frames());
      }
      for (std::size_t i = start; i < end; ++i) {
        const Utterance& u = corpus.utterances[order[i]];
        const auto labels = expand_labels(u.tokens, u.durations);
        auto logits = model.logits_graph(ad::constant_ref(u.mel.values), true);
        auto logp = ad::log_softmax_gather(std::move(logits), labels.ids,
                                           -std::numeric_limits<double>::infinity());
        auto ce = ad::neg_sum(std::move(logp));
        epoch_loss += ce->val()(0, 0);
        ad::backward(ce, 1.0 / static_cast<double>(batch_frames));
      }
      epoch_frames += batch_frames;
      opt.step(params);
    }
    if (stats) stats->epoch_ce.push_back(epoch_loss / static_cast<double>(epoch_frames));
  }

  if (stats) {
    long correct = 0;
    long total = 0;
    for (std::size_t i : holdout_idx) {
      const Utterance& u = corpus.utterances[i];
      const auto labels = expand_labels(u.tokens, u.durations);
      const Matrix logits = model.logits(u.mel.values);
      for (std::size_t t = 0; t < logits.rows(); ++t) {
        const double* row = logits.row(t);
        std::size_t best = 0;
        for (std::size_t k = 1; k < logits.cols(); ++k) {
          if (row[k] > row[best]) best = k;
        }
        correct += (static_cast<int>(best) == labels.ids[t]) ? 1 : 0;
        ++total;
      }
    }
    stats->holdout_accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
    stats->holdout_frames = total;
  }
  return model;
}

}  // namespace artic
