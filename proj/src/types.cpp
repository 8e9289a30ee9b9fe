#include "artic/types.hpp"

#include <algorithm>
#include <set>

#include "artic/errors.hpp"

namespace artic {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

PhonemeInventory PhonemeInventory::create(std::vector<std::string> symbols,
                                          const std::string& silence_symbol) {
  PhonemeInventory inv;
  inv.symbols = std::move(symbols);
  auto it = std::find(inv.symbols.begin(), inv.symbols.end(), silence_symbol);
  require(it != inv.symbols.end(), "inventory: silence symbol not present");
  inv.silence_index = static_cast<int>(it - inv.symbols.begin());
  inv.validate();
  return inv;
}

int PhonemeInventory::index_of(const std::string& symbol) const {
  auto it = std::find(symbols.begin(), symbols.end(), symbol);
  require(it != symbols.end(), "inventory: unknown symbol '" + symbol + "'");
  return static_cast<int>(it - symbols.begin());
}

void PhonemeInventory::validate() const {
  require(!symbols.empty(), "inventory: empty");
  std::set<std::string> uniq(symbols.begin(), symbols.end());
  require(uniq.size() == symbols.size(), "inventory: duplicate symbols");
  require(silence_index >= 0 && silence_index < size(), "inventory: bad silence index");
}

std::uint64_t PhonemeInventory::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& s : symbols) {
    h = fnv1a(s.data(), s.size(), h);
    h = fnv1a("\x1f", 1, h);
  }
  h = fnv1a(&silence_index, sizeof(silence_index), h);
  return h;
}

long DurationSequence::total() const {
  long t = 0;
  for (int f : frames) t += f;
  return t;
}

void FramePosteriors::validate(double tol) const {
  for (std::size_t t = 0; t < probs.rows(); ++t) {
    double s = 0.0;
    for (std::size_t k = 0; k < probs.cols(); ++k) {
      const double p = probs(t, k);
      if (p < 0.0 || p > 1.0) {
        throw InvariantError("posteriors: entry out of [0,1] at frame " + std::to_string(t));
      }
      s += p;
    }
    if (std::abs(s - 1.0) > tol) {
      throw InvariantError("posteriors: row " + std::to_string(t) + " does not sum to 1");
    }
  }
}

void Utterance::validate(int num_classes) const {
  const std::string who = "utterance '" + utt_id + "': ";
  if (tokens.size() == 0) throw InvariantError(who + "empty token sequence");
  if (tokens.size() != durations.size()) {
    throw InvariantError(who + "token/duration length mismatch");
  }
  for (int id : tokens.ids) {
    if (id < 0 || id >= num_classes) throw InvariantError(who + "token id out of range");
  }
  for (int f : durations.frames) {
    if (f < 1) throw InvariantError(who + "non-positive duration");
  }
  if (durations.total() != static_cast<long>(mel.frames())) {
    throw InvariantError(who + "duration sum != mel frame count");
  }
  if (!all_finite(mel.values)) throw InvariantError(who + "non-finite mel values");
  if (impaired_mask && impaired_mask->size() != mel.frames()) {
    throw InvariantError(who + "impaired_mask length != mel frame count");
  }
}

void HyperParams::validate() const {
  require(beta > 0.0, "hyperparams: beta must be > 0");
  require(gamma > 0.0, "hyperparams: gamma must be > 0");
  require(lambda > 0.0, "hyperparams: lambda must be > 0");
  require(sigma2 > 0.0, "hyperparams: sigma2 must be > 0");
  require(eps_floor > 0.0, "hyperparams: eps_floor must be > 0");
}

ExpandedLabels expand_labels(const TokenSequence& tokens, const DurationSequence& durations) {
  require(tokens.size() == durations.size(), "expand_labels: length mismatch");
  require(tokens.size() >= 1, "expand_labels: empty input");
  ExpandedLabels out;
  out.ids.reserve(static_cast<std::size_t>(durations.total()));
  for (std::size_t n = 0; n < tokens.size(); ++n) {
    const int d = durations.frames[n];
    require(d >= 1, "expand_labels: non-positive duration");
    for (int i = 0; i < d; ++i) out.ids.push_back(tokens.ids[n]);
  }
  return out;
}

}  // namespace artic
