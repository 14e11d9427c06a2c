#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace ugraph {

using Rng = std::mt19937_64;

/// Seed namespaces keep independent consumers of one master seed apart.
enum class Stream : std::uint32_t {
  kDataset = 1,
  kPretrain = 2,
  kNuts = 3,
  kActiveNet = 4,
  kTestScenes = 5,
  kEpisodeNoise = 6,
  kRandomAction = 7,
  kOodScenes = 8,
};

/// Deterministic generator for (seed, stream, ids...). std::seed_seq mixing is
/// fully specified by the standard, so streams are stable across platforms.
inline Rng derive_rng(std::uint64_t seed, Stream stream,
                      std::initializer_list<std::uint64_t> ids = {}) {
  std::vector<std::uint32_t> words;
  words.reserve(3 + 2 * ids.size());
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  words.push_back(static_cast<std::uint32_t>(stream));
  for (auto id : ids) {
    words.push_back(static_cast<std::uint32_t>(id));
    words.push_back(static_cast<std::uint32_t>(id >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace ugraph
