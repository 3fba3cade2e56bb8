#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fedsim {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Labeled seed fan-out: every consumer derives an independent stream from the
// master seed, a label naming the consumer, and up to two integer coordinates
// (typically round and client id). The result depends only on the arguments,
// never on call order, which is what makes parallel clients reproducible.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t a = 0,
                          std::uint64_t b = 0) noexcept;

inline Rng make_rng(std::uint64_t master, std::string_view label, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
  return Rng(derive_seed(master, label, a, b));
}

// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace fedsim
