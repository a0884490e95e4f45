#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>

namespace afl {

// Boost.Random distributions are header-defined, so a fixed seed produces the
// same stream on every platform (std:: distributions do not guarantee this).
using Rng = boost::random::mt19937_64;

// splitmix64 finalizer; mixes a base seed with a stream tag so independent
// subsystems draw from non-overlapping generators.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(derive_seed(seed, stream));
}

}  // namespace afl
