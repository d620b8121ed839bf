#pragma once

#include <cstdint>
#include <random>

namespace gridtie {

// Deterministic [0,1) double from the top 53 bits of one 64-bit draw.
// std::uniform_real_distribution is implementation-defined, which would break
// the bit-identical-trace guarantee, so the mapping is done by hand.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// value * (1 + pct/100 * u) with u uniform in [-1, 1).
inline double perturb_pct(std::mt19937_64& gen, double value, double pct) {
    const double u = 2.0 * uniform01(gen) - 1.0;
    return value * (1.0 + pct / 100.0 * u);
}

// splitmix64 finalizer; derives independent per-run seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace gridtie
