#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dbce {

/// splitmix64 step; used to derive independent component seeds from a run
/// seed so that e.g. TD sampling and rollouts never share a stream.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t component_tag) {
    return mix_seed(base ^ mix_seed(component_tag));
}

/// Uniform double in [0,1) from the top 53 bits of the generator output.
/// std::uniform_real_distribution is implementation-defined, which would
/// break cross-toolchain reproducibility of seeded runs.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Samples an index from an unnormalized nonnegative weight vector.
/// The last positive-weight entry absorbs rounding slack.
inline int sample_index(std::mt19937_64& rng, const std::vector<double>& weights, double total) {
    double u = uniform01(rng) * total;
    int last_positive = 0;
    for (int i = 0; i < static_cast<int>(weights.size()); ++i) {
        if (weights[i] <= 0.0) continue;
        last_positive = i;
        u -= weights[i];
        if (u < 0.0) return i;
    }
    return last_positive;
}

}  // namespace dbce
