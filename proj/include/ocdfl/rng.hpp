#pragma once

#include <cstdint>
#include <random>

namespace ocdfl {

using Rng = std::mt19937_64;

/// Independent stream derived from (seed, stream id). Subsystems draw from
/// their own stream so that adding draws in one does not perturb another.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed),
        static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream),
        static_cast<std::uint32_t>(stream >> 32),
        0x9E3779B9u};
    return Rng(seq);
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

} // namespace ocdfl
