#pragma once

#include <cstdint>
#include <random>

namespace bsdr {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    return mix_seed(base ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

using Engine = std::mt19937_64;

/// Uniform draw in [0, 1) built from the top 53 bits. Unlike
/// std::uniform_real_distribution this is identical across standard libraries.
inline double uniform01(Engine& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& engine, double lo, double hi) {
    return lo + (hi - lo) * uniform01(engine);
}

/// Uniform integer in [0, n) for n >= 1.
inline int uniform_int(Engine& engine, int n) {
    const auto k = static_cast<int>(uniform01(engine) * static_cast<double>(n));
    return k < n ? k : n - 1;
}

}  // namespace bsdr
