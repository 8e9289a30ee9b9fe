#include "artic/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "artic/errors.hpp"

namespace artic {

namespace {

double rate(long err, long total) {
  return total > 0 ? static_cast<double>(err) / static_cast<double>(total) : 0.0;
}

constexpr const char* kReportHeader =
    "Frame error rate (FER) against ground-truth expanded labels stands in for "
    "recognizer-level phone error rate; FER counts every misclassified frame and "
    "is the stricter measure.";

}  // namespace

double FerBreakdown::fer_total() const { return rate(err_total, frames_total); }
double FerBreakdown::fer_impaired() const { return rate(err_impaired, frames_impaired); }
double FerBreakdown::fer_clean() const { return rate(err_clean, frames_clean); }

FerBreakdown evaluate_fer(const Classifier& oracle, const std::vector<EvalItem>& items,
                          const std::set<int>& impaired_labels,
                          std::uint64_t training_classifier_hash,
                          std::vector<UtteranceFer>* per_utterance) {
  require(oracle.param_hash() != training_classifier_hash,
          "evaluate_fer: oracle must not be the training-time classifier");
  FerBreakdown out;
  for (const auto& item : items) {
    require(item.labels.size() == item.mel.frames(), "evaluate_fer: label/frame mismatch");
    const Matrix logits = oracle.logits(item.mel.values);
    UtteranceFer uf;
    uf.utt_id = item.utt_id;
    for (std::size_t t = 0; t < logits.rows(); ++t) {
      const double* row = logits.row(t);
      std::size_t best = 0;
      for (std::size_t k = 1; k < logits.cols(); ++k) {
        if (row[k] > row[best]) best = k;
      }
      const int label = item.labels.ids[t];
      const bool impaired = impaired_labels.count(label) > 0;
      const bool err = static_cast<int>(best) != label;
      ++out.frames_total;
      ++uf.frames;
      out.frames_impaired += impaired ? 1 : 0;
      out.frames_clean += impaired ? 0 : 1;
      uf.frames_impaired += impaired ? 1 : 0;
      if (err) {
        ++out.err_total;
        ++uf.errors;
        out.err_impaired += impaired ? 1 : 0;
        out.err_clean += impaired ? 0 : 1;
        uf.err_impaired += impaired ? 1 : 0;
      }
    }
    if (per_utterance) per_utterance->push_back(uf);
  }
  return out;
}

double evaluate_speaker_similarity(const std::vector<EvalItem>& items,
                                   const ToyLanguageSpec& lang, int speaker) {
  require(speaker >= 0 && speaker < lang.num_speakers(), "similarity: unknown speaker");
  const int M = lang.mel_bins();
  const int K = lang.inventory.size();
  const int sil = lang.inventory.silence_index;

  // per-phoneme frame means
  std::vector<std::vector<double>> mean(static_cast<std::size_t>(K),
                                        std::vector<double>(static_cast<std::size_t>(M), 0.0));
  std::vector<long> count(static_cast<std::size_t>(K), 0);
  for (const auto& item : items) {
    require(item.labels.size() == item.mel.frames(), "similarity: label/frame mismatch");
    for (std::size_t t = 0; t < item.mel.frames(); ++t) {
      const int k = item.labels.ids[t];
      if (k == sil) continue;
      ++count[static_cast<std::size_t>(k)];
      const double* row = item.mel.values.row(t);
      for (int m = 0; m < M; ++m) mean[static_cast<std::size_t>(k)][m] += row[m];
    }
  }

  int usable = 0;
  for (int k = 0; k < K; ++k) {
    if (k == sil) continue;
    if (count[static_cast<std::size_t>(k)] >= 10) {
      ++usable;
      for (int m = 0; m < M; ++m) {
        mean[static_cast<std::size_t>(k)][m] /= static_cast<double>(count[static_cast<std::size_t>(k)]);
      }
    }
  }
  if (usable < 3) {
    throw InsufficientDataError("similarity: fewer than 3 phonemes with >= 10 frames");
  }

  // per-bin weighted least squares: frames ~ c_m * template_k[m]
  std::vector<double> num(static_cast<std::size_t>(M), 0.0);
  std::vector<double> den(static_cast<std::size_t>(M), 0.0);
  for (int k = 0; k < K; ++k) {
    if (k == sil || count[static_cast<std::size_t>(k)] < 10) continue;
    const double n = static_cast<double>(count[static_cast<std::size_t>(k)]);
    for (int m = 0; m < M; ++m) {
      const double tmpl = lang.templates(static_cast<std::size_t>(k), static_cast<std::size_t>(m));
      num[static_cast<std::size_t>(m)] += n * mean[static_cast<std::size_t>(k)][m] * tmpl;
      den[static_cast<std::size_t>(m)] += n * tmpl * tmpl;
    }
  }
  const double den_max = *std::max_element(den.begin(), den.end());
  if (den_max <= 0.0) throw InsufficientDataError("similarity: no template support");

  double dot = 0.0, n_est = 0.0, n_true = 0.0;
  for (int m = 0; m < M; ++m) {
    if (den[static_cast<std::size_t>(m)] < 0.01 * den_max) continue;  // unsupported bin
    const double est = num[static_cast<std::size_t>(m)] / den[static_cast<std::size_t>(m)];
    const double truth = lang.colorations(static_cast<std::size_t>(speaker),
                                          static_cast<std::size_t>(m));
    dot += est * truth;
    n_est += est * est;
    n_true += truth * truth;
  }
  if (n_est < 1e-18 || n_true < 1e-18) {
    throw InsufficientDataError("similarity: degenerate coloration estimate");
  }
  const double cosine = dot / std::sqrt(n_est * n_true);
  return std::clamp(cosine, 0.0, 1.0);
}

EvalReport build_report(const std::vector<std::pair<std::string, std::vector<EvalItem>>>& systems,
                        const Classifier& oracle, const ToyLanguageSpec& lang, int target_speaker,
                        const std::set<int>& impaired_labels,
                        std::uint64_t training_classifier_hash, nlohmann::json metadata) {
  require(!systems.empty(), "build_report: no systems");
  // all systems must cover the identical held-out sentence set
  std::vector<std::size_t> counts;
  for (const auto& [name, items] : systems) counts.push_back(items.size());
  for (std::size_t c : counts) {
    if (c != counts.front()) {
      throw ContractViolation("build_report: systems evaluated on different sentence sets");
    }
  }

  EvalReport report;
  report.header = kReportHeader;
  report.metadata = std::move(metadata);
  report.metadata["oracle_seed"] = oracle.seed();
  report.metadata["oracle_hash"] = oracle.param_hash();
  for (const auto& [name, items] : systems) {
    SystemRow row;
    row.name = name;
    row.fer = evaluate_fer(oracle, items, impaired_labels, training_classifier_hash,
                           &row.per_utterance);
    row.similarity = evaluate_speaker_similarity(items, lang, target_speaker);
    row.utterances = static_cast<long>(items.size());
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

nlohmann::json fer_to_json(const FerBreakdown& f) {
  return {{"frames_total", f.frames_total}, {"frames_impaired", f.frames_impaired},
          {"frames_clean", f.frames_clean}, {"err_total", f.err_total},
          {"err_impaired", f.err_impaired}, {"err_clean", f.err_clean},
          {"fer_total", f.fer_total()},     {"fer_impaired", f.fer_impaired()},
          {"fer_clean", f.fer_clean()}};
}

FerBreakdown fer_from_json(const nlohmann::json& j) {
  FerBreakdown f;
  f.frames_total = j.at("frames_total").get<long>();
  f.frames_impaired = j.at("frames_impaired").get<long>();
  f.frames_clean = j.at("frames_clean").get<long>();
  f.err_total = j.at("err_total").get<long>();
  f.err_impaired = j.at("err_impaired").get<long>();
  f.err_clean = j.at("err_clean").get<long>();
  return f;
}

}  // namespace

void write_report_json(const std::filesystem::path& path, const EvalReport& report) {
  nlohmann::json j;
  j["header"] = report.header;
  j["metadata"] = report.metadata;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json r;
    r["name"] = row.name;
    r["fer"] = fer_to_json(row.fer);
    r["similarity"] = row.similarity;
    r["utterances"] = row.utterances;
    nlohmann::json per_utt = nlohmann::json::array();
    for (const auto& uf : row.per_utterance) {
      per_utt.push_back({{"utt_id", uf.utt_id},
                         {"frames", uf.frames},
                         {"errors", uf.errors},
                         {"frames_impaired", uf.frames_impaired},
                         {"err_impaired", uf.err_impaired}});
    }
    r["per_utterance"] = per_utt;
    rows.push_back(r);
  }
  j["rows"] = rows;
  std::ofstream os(path);
  if (!os) throw Error("write_report_json: cannot open " + path.string());
  os << j.dump(2) << "\n";
}

EvalReport read_report_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError("read_report_json: cannot open " + path.string());
  nlohmann::json j;
  is >> j;
  EvalReport report;
  report.header = j.at("header").get<std::string>();
  report.metadata = j.at("metadata");
  for (const auto& r : j.at("rows")) {
    SystemRow row;
    row.name = r.at("name").get<std::string>();
    row.fer = fer_from_json(r.at("fer"));
    row.similarity = r.at("similarity").get<double>();
    row.utterances = r.at("utterances").get<long>();
    for (const auto& uj : r.at("per_utterance")) {
      UtteranceFer uf;
      uf.utt_id = uj.at("utt_id").get<std::string>();
      uf.frames = uj.at("frames").get<long>();
      uf.errors = uj.at("errors").get<long>();
      uf.frames_impaired = uj.at("frames_impaired").get<long>();
      uf.err_impaired = uj.at("err_impaired").get<long>();
      row.per_utterance.push_back(uf);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw Error("write_report_csv: cannot open " + path.string());
  os << "# " << report.header << "\n";
  os << "system,fer_total,fer_impaired,fer_clean,similarity,utterances,frames\n";
  char buf[160];
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%ld,%ld\n", row.name.c_str(),
                  row.fer.fer_total(), row.fer.fer_impaired(), row.fer.fer_clean(),
                  row.similarity, row.utterances, row.fer.frames_total);
    os << buf;
  }
}

void write_pgm(const std::filesystem::path& path, const Matrix& mel) {
  double lo = mel.data()[0], hi = mel.data()[0];
  for (std::size_t i = 0; i < mel.size(); ++i) {
    lo = std::min(lo, mel.data()[i]);
    hi = std::max(hi, mel.data()[i]);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_pgm: cannot open " + path.string());
  os << "P5\n" << mel.rows() << " " << mel.cols() << "\n255\n";
  // frequency bins bottom-up, time left to right
  for (std::size_t c = mel.cols(); c-- > 0;) {
    for (std::size_t r = 0; r < mel.rows(); ++r) {
      const double v = (mel(r, c) - lo) / span;
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
}

}  // namespace artic
