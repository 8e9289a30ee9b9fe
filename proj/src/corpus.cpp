#include "artic/corpus.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "artic/errors.hpp"

namespace artic {

namespace {

constexpr char kMagic[4] = {'M', 'E', 'L', 'F'};

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

static_assert(sizeof(float) == 4, "float32 storage assumed");

}  // namespace

Matrix quantize_f32(const Matrix& m) {
  Matrix q(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) {
    q.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
  }
  return q;
}

void write_mel(const std::filesystem::path& path, const Matrix& values) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_mel: cannot open " + path.string());
  os.write(kMagic, 4);
  put_u32(os, static_cast<std::uint32_t>(values.rows()));
  put_u32(os, static_cast<std::uint32_t>(values.cols()));
  std::vector<float> buf(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    buf[i] = static_cast<float>(values.data()[i]);
  }
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!os) throw Error("write_mel: write failed for " + path.string());
}

Matrix read_mel(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingArtifactError("read_mel: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw ShapeError("read_mel: bad magic in " + path.string());
  }
  const std::uint32_t t = get_u32(is);
  const std::uint32_t m = get_u32(is);
  if (!is || t == 0 || m == 0) throw ShapeError("read_mel: bad header in " + path.string());
  std::vector<float> buf(static_cast<std::size_t>(t) * m);
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (static_cast<std::size_t>(is.gcount()) != buf.size() * sizeof(float)) {
    throw ShapeError("read_mel: truncated matrix file " + path.string());
  }
  is.peek();
  if (!is.eof()) throw ShapeError("read_mel: trailing bytes in " + path.string());
  Matrix values(t, m);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = static_cast<double>(buf[i]);
    if (!std::isfinite(v)) throw NonFiniteError("read_mel: non-finite value in " + path.string());
    values.data()[i] = v;
  }
  return values;
}

void Corpus::validate() const {
  inventory.validate();
  for (const auto& u : utterances) u.validate(inventory.size());
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  corpus.validate();
  std::filesystem::create_directories(dir / "mels");

  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["inventory"] = {{"symbols", corpus.inventory.symbols},
                           {"silence", corpus.inventory.symbols[corpus.inventory.silence_index]}};
  std::vector<int> speakers;
  for (const auto& u : corpus.utterances) {
    if (std::find(speakers.begin(), speakers.end(), u.speaker) == speakers.end()) {
      speakers.push_back(u.speaker);
    }
  }
  std::sort(speakers.begin(), speakers.end());
  manifest["speakers"] = speakers;
  if (!corpus.metadata.is_null()) manifest["metadata"] = corpus.metadata;

  nlohmann::json utts = nlohmann::json::array();
  for (const auto& u : corpus.utterances) {
    const std::string rel = "mels/" + u.utt_id + ".mel";
    nlohmann::json j;
    j["utt_id"] = u.utt_id;
    j["speaker"] = u.speaker;
    j["tokens"] = u.tokens.ids;
    j["durations"] = u.durations.frames;
    if (u.impaired_mask) {
      j["impaired_mask"] = *u.impaired_mask;
    } else {
      j["impaired_mask"] = nullptr;
    }
    j["mel"] = rel;
    utts.push_back(j);
    write_mel(dir / rel, u.mel.values);
  }
  manifest["utterances"] = utts;

  std::ofstream os(dir / "manifest.json");
  if (!os) throw Error("save_corpus: cannot write manifest in " + dir.string());
  os << manifest.dump(2) << "\n";
}

Corpus load_corpus(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream is(manifest_path);
  if (!is) throw MissingArtifactError("load_corpus: missing " + manifest_path.string());

  nlohmann::json manifest;
  try {
    is >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError("load_corpus: unparseable manifest: " + std::string(e.what()));
  }

  Corpus corpus;
  try {
    const auto& inv = manifest.at("inventory");
    corpus.inventory = PhonemeInventory::create(
        inv.at("symbols").get<std::vector<std::string>>(), inv.at("silence").get<std::string>());
    if (manifest.contains("metadata")) corpus.metadata = manifest["metadata"];

    for (const auto& j : manifest.at("utterances")) {
      Utterance u;
      u.utt_id = j.at("utt_id").get<std::string>();
      u.speaker = j.at("speaker").get<int>();
      u.tokens.ids = j.at("tokens").get<std::vector<int>>();
      u.durations.frames = j.at("durations").get<std::vector<int>>();
      if (j.contains("impaired_mask") && !j["impaired_mask"].is_null()) {
        u.impaired_mask = j["impaired_mask"].get<std::vector<std::uint8_t>>();
      }
      u.mel.values = read_mel(dir / j.at("mel").get<std::string>());
      corpus.utterances.push_back(std::move(u));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError("load_corpus: manifest schema error: " + std::string(e.what()));
  }

  corpus.validate();
  return corpus;
}

}  // namespace artic
