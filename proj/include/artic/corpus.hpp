#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "artic/types.hpp"

namespace artic {

// A corpus directory holds manifest.json plus one .mel file per utterance:
//   16-byte header: magic "MELF", u32 LE frame count T, u32 LE bin count M,
//   then T*M little-endian float32 values, row-major (frame-major).
//
// Mel values are quantized to float32 on generation, so save/load round-trips
// are exact. `metadata` carries generator specs (language, impairment) opaque
// to this layer.
struct Corpus {
  PhonemeInventory inventory;
  std::vector<Utterance> utterances;
  nlohmann::json metadata;  // may be null

  void validate() const;
};

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

void write_mel(const std::filesystem::path& path, const Matrix& values);
Matrix read_mel(const std::filesystem::path& path);

// Snaps every entry to its nearest float32, the on-disk precision.
Matrix quantize_f32(const Matrix& m);

}  // namespace artic
