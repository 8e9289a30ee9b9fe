#include "artic/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "artic/errors.hpp"

namespace artic {

namespace {

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.size();
  require(rows > 0, "matrix_from_json: empty");
  const auto cols = j.at(0).size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    require(j.at(r).size() == cols, "matrix_from_json: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

void add_bump(Matrix& templates, int row, double center, double amp, double width) {
  for (std::size_t m = 0; m < templates.cols(); ++m) {
    const double d = static_cast<double>(m) - center;
    templates(static_cast<std::size_t>(row), m) += amp * std::exp(-d * d / (2.0 * width * width));
  }
}

double min_pairwise_template_distance(const Matrix& templates) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < templates.rows(); ++a) {
    for (std::size_t b = a + 1; b < templates.rows(); ++b) {
      best = std::min(best, std::sqrt(sq_distance(templates.row(a), templates.row(b),
                                                  templates.cols())));
    }
  }
  return best;
}

}  // namespace

void ToyLanguageSpec::validate() const {
  inventory.validate();
  require(templates.rows() == static_cast<std::size_t>(inventory.size()),
          "language: template count != inventory size");
  require(colorations.cols() == templates.cols(), "language: coloration/template bin mismatch");
  require(noise_scale > 0.0, "language: noise scale must be positive");
  require(duration_range.size() == static_cast<std::size_t>(inventory.size()),
          "language: duration range per phoneme required");
  for (const auto& [lo, hi] : duration_range) {
    require(lo >= 1 && hi >= lo, "language: bad duration range");
  }
  require(sentence_min >= 1 && sentence_max >= sentence_min, "language: bad sentence range");
  require(all_finite(templates) && all_finite(colorations), "language: non-finite spec");
  const double min_dist = min_pairwise_template_distance(templates);
  if (min_dist < 4.0 * noise_scale) {
    throw InvariantError("language: templates not separable (min distance " +
                         std::to_string(min_dist) + " < 4x noise scale)");
  }
}

nlohmann::json ToyLanguageSpec::to_json() const {
  nlohmann::json j;
  j["inventory"] = {{"symbols", inventory.symbols},
                    {"silence", inventory.symbols[inventory.silence_index]}};
  j["templates"] = matrix_to_json(templates);
  j["colorations"] = matrix_to_json(colorations);
  j["noise_scale"] = noise_scale;
  nlohmann::json dr = nlohmann::json::array();
  for (const auto& [lo, hi] : duration_range) dr.push_back({lo, hi});
  j["duration_range"] = dr;
  j["sentence_min"] = sentence_min;
  j["sentence_max"] = sentence_max;
  return j;
}

ToyLanguageSpec ToyLanguageSpec::from_json(const nlohmann::json& j) {
  ToyLanguageSpec lang;
  lang.inventory = PhonemeInventory::create(
      j.at("inventory").at("symbols").get<std::vector<std::string>>(),
      j.at("inventory").at("silence").get<std::string>());
  lang.templates = matrix_from_json(j.at("templates"));
  lang.colorations = matrix_from_json(j.at("colorations"));
  lang.noise_scale = j.at("noise_scale").get<double>();
  for (const auto& pair : j.at("duration_range")) {
    lang.duration_range.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
  }
  lang.sentence_min = j.at("sentence_min").get<int>();
  lang.sentence_max = j.at("sentence_max").get<int>();
  lang.validate();
  return lang;
}

void ImpairmentSpec::validate(const PhonemeInventory& inv) const {
  require(target_speaker >= 0, "impairment: target speaker required");
  require(!impaired.empty(), "impairment: empty impaired set");
  for (int k : impaired) {
    require(k >= 0 && k < inv.size(), "impairment: phoneme index out of range");
    require(k != inv.silence_index, "impairment: silence cannot be impaired");
  }
  if (mode == ImpairmentMode::substitution) {
    require(rho >= 0.0 && rho <= 1.0, "impairment: rho out of [0,1]");
    for (int k : impaired) {
      auto it = confusable.find(k);
      require(it != confusable.end(), "impairment: missing confusable for impaired phoneme");
      require(it->second >= 0 && it->second < inv.size() && it->second != k,
              "impairment: bad confusable index");
    }
  } else {
    require(alpha >= 0.0, "impairment: alpha must be >= 0");
    require(sigma2 > 0.0, "impairment: sigma2 must be > 0");
  }
}

nlohmann::json ImpairmentSpec::to_json() const {
  nlohmann::json j;
  j["target_speaker"] = target_speaker;
  j["mode"] = mode == ImpairmentMode::substitution ? "substitution" : "eq1-sampled";
  j["impaired"] = impaired;
  nlohmann::json conf = nlohmann::json::object();
  for (const auto& [k, v] : confusable) conf[std::to_string(k)] = v;
  j["confusable"] = conf;
  j["rho"] = rho;
  j["alpha"] = alpha;
  j["sigma2"] = sigma2;
  return j;
}

ImpairmentSpec ImpairmentSpec::from_json(const nlohmann::json& j) {
  ImpairmentSpec s;
  s.target_speaker = j.at("target_speaker").get<int>();
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "substitution") {
    s.mode = ImpairmentMode::substitution;
  } else if (mode == "eq1-sampled") {
    s.mode = ImpairmentMode::eq1_sampled;
  } else {
    throw ManifestError("impairment: unknown mode '" + mode + "'");
  }
  s.impaired = j.at("impaired").get<std::vector<int>>();
  for (const auto& [k, v] : j.at("confusable").items()) {
    s.confusable[std::stoi(k)] = v.get<int>();
  }
  s.rho = j.at("rho").get<double>();
  s.alpha = j.at("alpha").get<double>();
  s.sigma2 = j.at("sigma2").get<double>();
  return s;
}

ToyLanguageSpec default_language(int num_speakers, std::uint64_t seed) {
  require(num_speakers >= 1, "default_language: need at least one speaker");
  const int M = 20;
  const std::vector<std::string> symbols = {"sil", "aa", "ee", "ii", "oo", "uu", "kk",
                                            "gg", "tt", "dd", "ng", "ss", "mm"};
  ToyLanguageSpec lang;
  lang.inventory = PhonemeInventory::create(symbols, "sil");
  const int K = lang.inventory.size();
  lang.templates = Matrix(static_cast<std::size_t>(K), static_cast<std::size_t>(M));

  // (primary, secondary) bump centers; confusable pairs share the primary bump
  // and differ only in the secondary band, the way acoustically close sounds do:
  // ii/ee at bin 4, kk/gg at bin 10, tt/dd at bin 12.
  const std::map<std::string, std::pair<double, double>> bands = {
      {"aa", {2, 11}},  {"ee", {4, 13}},  {"ii", {4, 17}},  {"oo", {6, 15}},
      {"uu", {8, 12}},  {"kk", {10, 18}}, {"gg", {10, 14}}, {"tt", {12, 19}},
      {"dd", {12, 16}}, {"ng", {14, 3}},  {"ss", {16, 5}},  {"mm", {18, 7}}};
  for (const auto& [sym, centers] : bands) {
    const int k = lang.inventory.index_of(sym);
    add_bump(lang.templates, k, centers.first, 1.0, 0.8);
    add_bump(lang.templates, k, centers.second, 0.7, 0.8);
  }
  // silence row stays zero

  lang.colorations = Matrix(static_cast<std::size_t>(num_speakers), static_cast<std::size_t>(M));
  Rng rng(derive_seed(seed, 0xC0108));
  for (int s = 0; s < num_speakers; ++s) {
    const double tilt = rng.gauss(0.0, 0.5);
    const double curve = rng.gauss(0.0, 0.5);
    for (int m = 0; m < M; ++m) {
      const double x = 2.0 * static_cast<double>(m) / (M - 1) - 1.0;  // ramp in [-1,1]
      const double jitter = rng.gauss(0.0, 0.05);
      lang.colorations(static_cast<std::size_t>(s), static_cast<std::size_t>(m)) =
          std::exp(tilt * x + curve * (x * x - 1.0 / 3.0) + jitter);
    }
  }

  lang.noise_scale = 0.07;
  lang.duration_range.resize(static_cast<std::size_t>(K));
  lang.duration_range[static_cast<std::size_t>(lang.inventory.silence_index)] = {2, 4};
  for (int k = 0; k < K; ++k) {
    if (k == lang.inventory.silence_index) continue;
    const int lo = 2 + (k % 3);
    const int hi = std::min(8, lo + 3 + (k % 2));
    lang.duration_range[static_cast<std::size_t>(k)] = {lo, hi};
  }
  lang.sentence_min = 4;
  lang.sentence_max = 12;
  lang.validate();
  return lang;
}

ImpairmentSpec default_impairment(const ToyLanguageSpec& lang, int target_speaker) {
  ImpairmentSpec imp;
  imp.target_speaker = target_speaker;
  imp.mode = ImpairmentMode::substitution;
  imp.rho = 0.85;
  const int kk = lang.inventory.index_of("kk");
  const int gg = lang.inventory.index_of("gg");
  const int tt = lang.inventory.index_of("tt");
  const int dd = lang.inventory.index_of("dd");
  const int ii = lang.inventory.index_of("ii");
  const int ee = lang.inventory.index_of("ee");
  imp.impaired = {kk, tt, ii};
  imp.confusable = {{kk, gg}, {tt, dd}, {ii, ee}};
  imp.validate(lang.inventory);
  return imp;
}

std::vector<double> sample_impaired_frame(const std::vector<double>& y_clean_frame, double alpha,
                                          double sigma2, Rng& rng) {
  require(alpha >= 0.0, "sample_impaired_frame: alpha must be >= 0");
  require(sigma2 > 0.0, "sample_impaired_frame: sigma2 must be > 0");
  const std::size_t M = y_clean_frame.size();
  require(M >= 1, "sample_impaired_frame: empty frame");
  const double u = rng.gamma((alpha + static_cast<double>(M)) / 2.0, 2.0 * sigma2);
  const double r = std::sqrt(u);
  std::vector<double> dir(M);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      dir[m] = rng.gauss();
      norm2 += dir[m] * dir[m];
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<double> out(M);
  for (std::size_t m = 0; m < M; ++m) out[m] = y_clean_frame[m] + r * dir[m] * inv;
  return out;
}

std::vector<double> sample_impaired_frame(const std::vector<double>& y_clean_frame, double alpha,
                                          double sigma2, std::uint64_t seed) {
  Rng rng(seed);
  return sample_impaired_frame(y_clean_frame, alpha, sigma2, rng);
}

namespace {

Utterance render_utterance(const ToyLanguageSpec& lang, int speaker, const TokenSequence& tokens,
                           const DurationSequence& durations,
                           const std::optional<ImpairmentSpec>& impairment, bool mask_always,
                           Rng& rng, const std::string& utt_id) {
  const int M = lang.mel_bins();
  const auto labels = expand_labels(tokens, durations);
  const std::size_t T = labels.size();

  Utterance u;
  u.utt_id = utt_id;
  u.speaker = speaker;
  u.tokens = tokens;
  u.durations = durations;
  u.mel.values = Matrix(T, static_cast<std::size_t>(M));
  std::vector<std::uint8_t> mask(T, 0);

  const bool apply_impairment =
      impairment.has_value() && impairment->target_speaker == speaker;
  const std::set<int> impaired_set =
      apply_impairment ? std::set<int>(impairment->impaired.begin(), impairment->impaired.end())
                       : std::set<int>();

  for (std::size_t t = 0; t < T; ++t) {
    const int k = labels.ids[t];
    const bool impaired = apply_impairment && impaired_set.count(k) > 0;
    double* frame = u.mel.values.row(t);
    if (impaired && impairment->mode == ImpairmentMode::substitution) {
      const int conf = impairment->confusable.at(k);
      for (int m = 0; m < M; ++m) {
        const double blend = (1.0 - impairment->rho) * lang.templates(k, m) +
                             impairment->rho * lang.templates(conf, m);
        frame[m] = lang.colorations(speaker, m) * blend + lang.noise_scale * rng.gauss();
      }
    } else {
      for (int m = 0; m < M; ++m) {
        frame[m] = lang.colorations(speaker, m) * lang.templates(k, m) +
                   lang.noise_scale * rng.gauss();
      }
      if (impaired) {  // eq1-sampled: draw around the clean frame
        std::vector<double> clean(frame, frame + M);
        const auto y = sample_impaired_frame(clean, impairment->alpha, impairment->sigma2, rng);
        for (int m = 0; m < M; ++m) frame[m] = y[static_cast<std::size_t>(m)];
      }
    }
    mask[t] = impaired ? 1 : 0;
  }
  u.mel.values = quantize_f32(u.mel.values);
  if (mask_always || apply_impairment) u.impaired_mask = std::move(mask);
  return u;
}

}  // namespace

Corpus generate_corpus(const ToyLanguageSpec& lang, const std::vector<int>& speakers,
                       int sentences_per_speaker,
                       const std::optional<ImpairmentSpec>& impairment, std::uint64_t seed) {
  lang.validate();
  require(!speakers.empty() && sentences_per_speaker >= 1, "generate_corpus: empty request");
  for (int s : speakers) {
    require(s >= 0 && s < lang.num_speakers(), "generate_corpus: speaker without coloration");
  }
  if (impairment) {
    impairment->validate(lang.inventory);
    require(std::find(speakers.begin(), speakers.end(), impairment->target_speaker) !=
                speakers.end(),
            "generate_corpus: impaired speaker not in speaker list");
  }

  const int sil = lang.inventory.silence_index;
  Corpus corpus;
  corpus.inventory = lang.inventory;
  corpus.metadata["language"] = lang.to_json();
  if (impairment) corpus.metadata["impairment"] = impairment->to_json();

  std::vector<int> phonemes;
  for (int k = 0; k < lang.inventory.size(); ++k) {
    if (k != sil) phonemes.push_back(k);
  }

  for (int spk : speakers) {
    for (int idx = 0; idx < sentences_per_speaker; ++idx) {
      Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(spk) << 32) |
                                    static_cast<std::uint64_t>(idx)));
      const int n = static_cast<int>(rng.uniform_int(lang.sentence_min, lang.sentence_max));
      TokenSequence tokens;
      tokens.ids.push_back(sil);
      for (int i = 0; i < n; ++i) {
        tokens.ids.push_back(phonemes[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<long>(phonemes.size()) - 1))]);
      }
      tokens.ids.push_back(sil);
      DurationSequence durations;
      for (int id : tokens.ids) {
        const auto& [lo, hi] = lang.duration_range[static_cast<std::size_t>(id)];
        durations.frames.push_back(static_cast<int>(rng.uniform_int(lo, hi)));
      }
      char buf[32];
      std::snprintf(buf, sizeof(buf), "spk%d_%04d", spk, idx);
      corpus.utterances.push_back(
          render_utterance(lang, spk, tokens, durations, impairment, true, rng, buf));
    }
  }
  corpus.validate();
  return corpus;
}

int nearest_template(const ToyLanguageSpec& lang, int speaker, const double* frame) {
  require(speaker >= 0 && speaker < lang.num_speakers(), "nearest_template: bad speaker");
  const int M = lang.mel_bins();
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < lang.inventory.size(); ++k) {
    double d = 0.0;
    for (int m = 0; m < M; ++m) {
      const double diff =
          frame[m] - lang.colorations(speaker, m) * lang.templates(k, m);
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

Corpus rerender_clean(const Corpus& source, const ToyLanguageSpec& lang, int speaker,
                      std::uint64_t seed) {
  require(speaker >= 0 && speaker < lang.num_speakers(), "rerender_clean: bad speaker");
  Corpus out;
  out.inventory = lang.inventory;
  out.metadata["language"] = lang.to_json();
  int idx = 0;
  for (const auto& src : source.utterances) {
    Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(speaker) << 32) |
                                  static_cast<std::uint64_t>(idx)));
    char buf[48];
    std::snprintf(buf, sizeof(buf), "spk%d_re%04d", speaker, idx);
    out.utterances.push_back(render_utterance(lang, speaker, src.tokens, src.durations,
                                              std::nullopt, true, rng, buf));
    ++idx;
  }
  out.validate();
  return out;
}

}  // namespace artic
