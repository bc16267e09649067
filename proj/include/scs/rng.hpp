#pragma once

#include <cstdint>
#include <random>

namespace scs {

/// SplitMix64 finalizer. Used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * Explicit random-number handle. There is no global state anywhere in the
 * library: every stochastic routine takes one of these.
 *
 * Work item `i` of a parallel loop draws from `derive(i)`, whose seed is
 * `seed ^ mix64(i)`, so results do not depend on scheduling.
 */
class SeededRng {
public:
    using engine_type = std::mt19937_64;

    explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    SeededRng derive(std::uint64_t index) const { return SeededRng(seed_ ^ mix64(index)); }

    double normal() { return normal_(engine_); }

    double uniform() { return uniform_(engine_); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

    bool coin() { return (engine_() >> 63) != 0; }

    engine_type& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    engine_type engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace scs
