#include "artic/acoustic.hpp"

#include <cmath>

#include "artic/errors.hpp"

namespace artic {

namespace {
constexpr int kEncKernel = 3;
constexpr int kDecKernel = 5;
}  // namespace

AcousticModel AcousticModel::random_init(const PhonemeInventory& inv, int mel_bins,
                                         int num_speakers, const AcousticDims& dims,
                                         std::uint64_t seed) {
  inv.validate();
  require(mel_bins >= 1 && num_speakers >= 1, "acoustic: bad dimensions");
  AcousticModel m;
  m.inv_ = inv;
  m.dims_ = dims;
  m.bins_ = mel_bins;
  m.n_speakers_ = num_speakers;
  m.seed_ = seed;
  Rng rng(derive_seed(seed, 0xAC0057));
  const double tok_scale = 1.0 / std::sqrt(static_cast<double>(dims.token_emb));
  m.token_emb_.w = rng.gauss_matrix(static_cast<std::size_t>(inv.size()),
                                    static_cast<std::size_t>(dims.token_emb), tok_scale);
  const double spk_scale = 1.0 / std::sqrt(static_cast<double>(dims.spk_emb));
  m.spk_emb_.w = rng.gauss_matrix(static_cast<std::size_t>(num_speakers),
                                  static_cast<std::size_t>(dims.spk_emb), spk_scale);
  m.token_emb_.zero_grad();
  m.spk_emb_.zero_grad();
  m.e1_ = nn::ConvLayer::init(dims.token_emb, dims.hidden, kEncKernel, rng);
  m.e2_ = nn::ConvLayer::init(dims.hidden, dims.hidden, kEncKernel, rng);
  m.d1_ = nn::ConvLayer::init(dims.hidden + dims.spk_emb, dims.hidden, kDecKernel, rng);
  m.d2_ = nn::ConvLayer::init(dims.hidden, dims.hidden, kDecKernel, rng);
  m.d3_ = nn::ConvLayer::init(dims.hidden, mel_bins, kDecKernel, rng);
  return m;
}

void AcousticModel::check_speaker(int speaker) const {
  if (speaker < 0 || speaker >= n_speakers_) {
    throw ContractViolation("acoustic: unknown speaker id " + std::to_string(speaker));
  }
}

Matrix AcousticModel::encode(const TokenSequence& tokens) const {
  require(tokens.size() >= 1, "encode: empty token sequence");
  Matrix emb(tokens.size(), static_cast<std::size_t>(dims_.token_emb));
  for (std::size_t n = 0; n < tokens.size(); ++n) {
    const int id = tokens.ids[n];
    require(id >= 0 && id < inv_.size(), "encode: token id out of range");
    const double* src = token_emb_.w.row(static_cast<std::size_t>(id));
    double* dst = emb.row(n);
    for (int c = 0; c < dims_.token_emb; ++c) dst[c] = src[c];
  }
  Matrix h = e1_.forward(emb);
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = std::tanh(h.data()[i]);
  h = e2_.forward(h);
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = std::tanh(h.data()[i]);
  return h;
}

Matrix AcousticModel::length_regulate(const Matrix& hidden, const DurationSequence& durations) {
  if (hidden.rows() != durations.size()) {
    throw ShapeError("length_regulate: hidden/duration length mismatch");
  }
  long total = 0;
  for (int d : durations.frames) {
    require(d >= 1, "length_regulate: non-positive duration");
    total += d;
  }
  Matrix out(static_cast<std::size_t>(total), hidden.cols());
  std::size_t t = 0;
  for (std::size_t n = 0; n < hidden.rows(); ++n) {
    for (int i = 0; i < durations.frames[n]; ++i, ++t) {
      const double* src = hidden.row(n);
      double* dst = out.row(t);
      for (std::size_t c = 0; c < hidden.cols(); ++c) dst[c] = src[c];
    }
  }
  return out;
}

MelSpectrogram AcousticModel::forward(const TokenSequence& tokens,
                                      const DurationSequence& durations, int speaker) const {
  check_speaker(speaker);
  require(tokens.size() == durations.size(), "forward: token/duration mismatch");
  const Matrix h = encode(tokens);
  const Matrix hr = length_regulate(h, durations);
  Matrix x(hr.rows(), hr.cols() + static_cast<std::size_t>(dims_.spk_emb));
  const double* spk = spk_emb_.w.row(static_cast<std::size_t>(speaker));
  for (std::size_t t = 0; t < hr.rows(); ++t) {
    double* dst = x.row(t);
    const double* src = hr.row(t);
    for (std::size_t c = 0; c < hr.cols(); ++c) dst[c] = src[c];
    for (int c = 0; c < dims_.spk_emb; ++c) dst[hr.cols() + static_cast<std::size_t>(c)] = spk[c];
  }
  Matrix y = d1_.forward(x);
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = std::tanh(y.data()[i]);
  y = d2_.forward(y);
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = std::tanh(y.data()[i]);
  y = d3_.forward(y);
  MelSpectrogram mel;
  mel.values = std::move(y);
  return mel;
}

ad::NodeP AcousticModel::forward_graph(const TokenSequence& tokens,
                                       const DurationSequence& durations, int speaker,
                                       bool train_encoder, bool train_decoder) {
  check_speaker(speaker);
  require(tokens.size() == durations.size(), "forward_graph: token/duration mismatch");
  for (int id : tokens.ids) require(id >= 0 && id < inv_.size(), "forward_graph: bad token id");

  auto tok_table = train_encoder ? ad::param(token_emb_.w, token_emb_.g)
                                 : ad::constant_ref(token_emb_.w);
  auto emb = ad::embed_rows(std::move(tok_table), tokens.ids);
  auto h = ad::tanh_(e1_.graph(std::move(emb), train_encoder));
  h = ad::tanh_(e2_.graph(std::move(h), train_encoder));
  auto hr = ad::repeat_rows(std::move(h), durations.frames);

  auto spk_table =
      train_decoder ? ad::param(spk_emb_.w, spk_emb_.g) : ad::constant_ref(spk_emb_.w);
  auto spk_row = ad::embed_rows(std::move(spk_table), {speaker});
  auto spk_frames =
      ad::repeat_rows(std::move(spk_row), {static_cast<int>(durations.total())});
  auto x = ad::concat_cols(std::move(hr), std::move(spk_frames));

  auto y = ad::tanh_(d1_.graph(std::move(x), train_decoder));
  y = ad::tanh_(d2_.graph(std::move(y), train_decoder));
  return d3_.graph(std::move(y), train_decoder);
}

SpeakerEmbedding AcousticModel::speaker_embedding(int speaker) const {
  check_speaker(speaker);
  SpeakerEmbedding e;
  e.id = speaker;
  e.vec.assign(spk_emb_.w.row(static_cast<std::size_t>(speaker)),
               spk_emb_.w.row(static_cast<std::size_t>(speaker)) + dims_.spk_emb);
  return e;
}

std::vector<nn::Param*> AcousticModel::encoder_params() {
  return {&token_emb_, &e1_.W, &e1_.b, &e2_.W, &e2_.b};
}

std::vector<nn::Param*> AcousticModel::decoder_params() {
  return {&spk_emb_, &d1_.W, &d1_.b, &d2_.W, &d2_.b, &d3_.W, &d3_.b};
}

std::vector<nn::Param*> AcousticModel::all_params() {
  auto v = encoder_params();
  for (auto* p : decoder_params()) v.push_back(p);
  return v;
}

std::uint64_t AcousticModel::encoder_hash() const {
  return nn::params_hash({&token_emb_, &e1_.W, &e1_.b, &e2_.W, &e2_.b});
}

std::uint64_t AcousticModel::param_hash() const {
  return nn::params_hash({&token_emb_, &e1_.W, &e1_.b, &e2_.W, &e2_.b, &spk_emb_, &d1_.W, &d1_.b,
                          &d2_.W, &d2_.b, &d3_.W, &d3_.b});
}

void AcousticModel::save(const std::filesystem::path& path) const {
  nlohmann::json meta;
  meta["kind"] = "acoustic";
  meta["inventory"] = {{"symbols", inv_.symbols},
                       {"silence", inv_.symbols[inv_.silence_index]}};
  meta["inventory_hash"] = inv_.hash();
  meta["mel_bins"] = bins_;
  meta["num_speakers"] = n_speakers_;
  meta["dims"] = {{"token_emb", dims_.token_emb},
                  {"hidden", dims_.hidden},
                  {"spk_emb", dims_.spk_emb}};
  meta["seed"] = seed_;
  nn::save_checkpoint(path, meta,
                      {{"token_emb", &token_emb_.w},
                       {"spk_emb", &spk_emb_.w},
                       {"e1.W", &e1_.W.w},
                       {"e1.b", &e1_.b.w},
                       {"e2.W", &e2_.W.w},
                       {"e2.b", &e2_.b.w},
                       {"d1.W", &d1_.W.w},
                       {"d1.b", &d1_.b.w},
                       {"d2.W", &d2_.W.w},
                       {"d2.b", &d2_.b.w},
                       {"d3.W", &d3_.W.w},
                       {"d3.b", &d3_.b.w}});
}

AcousticModel AcousticModel::load(const std::filesystem::path& path) {
  auto ck = nn::load_checkpoint(path);
  if (ck.meta.value("kind", "") != "acoustic") {
    throw IncompatibleError("acoustic: checkpoint kind mismatch");
  }
  auto inv = PhonemeInventory::create(
      ck.meta.at("inventory").at("symbols").get<std::vector<std::string>>(),
      ck.meta.at("inventory").at("silence").get<std::string>());
  AcousticDims dims;
  dims.token_emb = ck.meta.at("dims").at("token_emb").get<int>();
  dims.hidden = ck.meta.at("dims").at("hidden").get<int>();
  dims.spk_emb = ck.meta.at("dims").at("spk_emb").get<int>();
  AcousticModel m = random_init(inv, ck.meta.at("mel_bins").get<int>(),
                                ck.meta.at("num_speakers").get<int>(), dims,
                                ck.meta.at("seed").get<std::uint64_t>());
  m.token_emb_.w = ck.get("token_emb");
  m.spk_emb_.w = ck.get("spk_emb");
  m.e1_.W.w = ck.get("e1.W");
  m.e1_.b.w = ck.get("e1.b");
  m.e2_.W.w = ck.get("e2.W");
  m.e2_.b.w = ck.get("e2.b");
  m.d1_.W.w = ck.get("d1.W");
  m.d1_.b.w = ck.get("d1.b");
  m.d2_.W.w = ck.get("d2.W");
  m.d2_.b.w = ck.get("d2.b");
  m.d3_.W.w = ck.get("d3.W");
  m.d3_.b.w = ck.get("d3.b");
  return m;
}

AcousticModel AcousticModel::load(const std::filesystem::path& path,
                                  const PhonemeInventory& expected) {
  auto ck = nn::load_checkpoint(path);
  if (ck.meta.value("inventory_hash", std::uint64_t{0}) != expected.hash()) {
    throw IncompatibleError("acoustic: checkpoint inventory does not match");
  }
  return load(path);
}

// ---- duration model ---------------------------------------------------------

void DurationConfig::validate() const {
  require(epochs > 0 && batch_size > 0 && lr > 0.0, "duration config: bad values");
}

DurationModel DurationModel::random_init(const AcousticDims& dims, std::uint64_t seed) {
  DurationModel dm;
  dm.dims_ = dims;
  dm.seed_ = seed;
  Rng rng(derive_seed(seed, 0xD0A));
  dm.c1_ = nn::ConvLayer::init(dims.hidden + dims.spk_emb, 32, 3, rng);
  dm.head_ = nn::ConvLayer::init(32, 1, 1, rng);
  return dm;
}

std::vector<double> DurationModel::predict_log_durations(const Matrix& hidden,
                                                         const std::vector<double>& spk) const {
  require(static_cast<int>(spk.size()) == dims_.spk_emb, "duration: speaker embedding size");
  Matrix x(hidden.rows(), hidden.cols() + spk.size());
  for (std::size_t n = 0; n < hidden.rows(); ++n) {
    double* dst = x.row(n);
    const double* src = hidden.row(n);
    for (std::size_t c = 0; c < hidden.cols(); ++c) dst[c] = src[c];
    for (std::size_t c = 0; c < spk.size(); ++c) dst[hidden.cols() + c] = spk[c];
  }
  Matrix h = c1_.forward(x);
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = std::tanh(h.data()[i]);
  const Matrix out = head_.forward(h);
  std::vector<double> v(out.rows());
  for (std::size_t n = 0; n < out.rows(); ++n) v[n] = out(n, 0);
  return v;
}

int clamp_duration(double log_duration) {
  require(std::isfinite(log_duration), "duration: non-finite prediction");
  const long d = std::lround(std::exp(log_duration));
  return static_cast<int>(std::max(1L, d));
}

DurationSequence DurationModel::predict(const Matrix& hidden,
                                        const std::vector<double>& spk) const {
  const auto logd = predict_log_durations(hidden, spk);
  DurationSequence out;
  out.frames.reserve(logd.size());
  for (double v : logd) out.frames.push_back(clamp_duration(v));
  return out;
}

std::vector<nn::Param*> DurationModel::params() {
  return {&c1_.W, &c1_.b, &head_.W, &head_.b};
}

std::uint64_t DurationModel::param_hash() const {
  return nn::params_hash({&c1_.W, &c1_.b, &head_.W, &head_.b});
}

void DurationModel::save(const std::filesystem::path& path) const {
  nlohmann::json meta;
  meta["kind"] = "duration";
  meta["dims"] = {{"token_emb", dims_.token_emb},
                  {"hidden", dims_.hidden},
                  {"spk_emb", dims_.spk_emb}};
  meta["seed"] = seed_;
  nn::save_checkpoint(path, meta,
                      {{"c1.W", &c1_.W.w},
                       {"c1.b", &c1_.b.w},
                       {"head.W", &head_.W.w},
                       {"head.b", &head_.b.w}});
}

DurationModel DurationModel::load(const std::filesystem::path& path) {
  auto ck = nn::load_checkpoint(path);
  if (ck.meta.value("kind", "") != "duration") {
    throw IncompatibleError("duration: checkpoint kind mismatch");
  }
  AcousticDims dims;
  dims.token_emb = ck.meta.at("dims").at("token_emb").get<int>();
  dims.hidden = ck.meta.at("dims").at("hidden").get<int>();
  dims.spk_emb = ck.meta.at("dims").at("spk_emb").get<int>();
  DurationModel dm = random_init(dims, ck.meta.at("seed").get<std::uint64_t>());
  dm.c1_.W.w = ck.get("c1.W");
  dm.c1_.b.w = ck.get("c1.b");
  dm.head_.W.w = ck.get("head.W");
  dm.head_.b.w = ck.get("head.b");
  return dm;
}

DurationModel train_duration_model(const AcousticModel& model, const Corpus& corpus,
                                   const DurationConfig& config, std::uint64_t seed) {
  config.validate();
  require(!corpus.utterances.empty(), "train_duration_model: empty corpus");
  if (corpus.inventory.hash() != model.inventory().hash()) {
    throw IncompatibleError("train_duration_model: corpus/model inventory mismatch");
  }

  DurationModel dm = DurationModel::random_init(model.dims(), seed);
  auto params = dm.params();
  nn::Adam opt(config.lr);
  Rng shuffle_rng(derive_seed(seed, 0xD0A5));

  // encoder hiddens are fixed; precompute per utterance
  std::vector<Matrix> inputs;
  std::vector<Matrix> targets;
  inputs.reserve(corpus.utterances.size());
  for (const auto& u : corpus.utterances) {
    const Matrix h = model.encode(u.tokens);
    const auto spk = model.speaker_embedding(u.speaker).vec;
    Matrix x(h.rows(), h.cols() + spk.size());
    for (std::size_t n = 0; n < h.rows(); ++n) {
      double* dst = x.row(n);
      for (std::size_t c = 0; c < h.cols(); ++c) dst[c] = h(n, c);
      for (std::size_t c = 0; c < spk.size(); ++c) dst[h.cols() + c] = spk[c];
    }
    inputs.push_back(std::move(x));
    Matrix t(u.durations.size(), 1);
    for (std::size_t n = 0; n < u.durations.size(); ++n) {
      t(n, 0) = std::log(static_cast<double>(u.durations.frames[n]));
    }
    targets.push_back(std::move(t));
  }

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(0, static_cast<long>(i) - 1)]);
    }
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      nn::zero_grads(params);
      long tokens = 0;
      for (std::size_t i = start; i < end; ++i) tokens += inputs[order[i]].rows();
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t idx = order[i];
        auto h = ad::tanh_(dm.c1_.graph(ad::constant_ref(inputs[idx]), true));
        auto pred = dm.head_.graph(std::move(h), true);
        auto mse = ad::sum_sq_diff(std::move(pred), targets[idx]);
        ad::backward(mse, 1.0 / static_cast<double>(tokens));
      }
      opt.step(params);
    }
  }
  return dm;
}

}  // namespace artic
