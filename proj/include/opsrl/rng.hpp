#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace opsrl {

/// Derives an independent stream seed from a master seed and a stream index.
/// Uses splitmix64 steps so that streams for different indices are decorrelated
/// and the mapping is stable across platforms.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t x = master + 0x9e3779b97f4a7c15ULL * (index + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

/// Deterministic random source. Wraps std::mt19937_64 but generates doubles
/// and categorical draws itself: the standard library distributions are
/// implementation-defined, which would break cross-platform reproducibility.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Samples an index from an unnormalized nonnegative weight vector by CDF
    /// scan. Falls back to the last positive-weight index on accumulated
    /// rounding, so a draw always lands inside the support.
    int categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw std::invalid_argument("categorical: weights sum to zero");
        double u = uniform01() * total;
        double acc = 0.0;
        int last_positive = -1;
        for (int i = 0; i < static_cast<int>(weights.size()); ++i) {
            if (weights[i] > 0.0) last_positive = i;
            acc += weights[i];
            if (u < acc) return i;
        }
        return last_positive;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace opsrl
