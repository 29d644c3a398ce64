#pragma once

#include <cstdint>
#include <random>

namespace isoflow {

/// Deterministic per-stream engine derived from (seed, stream). Streams with
/// distinct indices are independent for practical purposes, so ensembles can
/// be generated in any order (or in parallel) and still reproduce.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

}  // namespace isoflow
