#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace plumbing {

// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Portable pseudo-random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Bounded integers use rejection sampling and reals take the top
/// 53 bits, so results are identical on every conforming platform (the
/// standard distributions are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [lo, hi], both inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
        const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
        if (span == ~std::uint64_t{0}) return static_cast<std::int64_t>(next_u64());
        const std::uint64_t range = span + 1;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % range) - 1;
        std::uint64_t draw;
        do {
            draw = next_u64();
        } while (draw > limit);
        return lo + static_cast<std::int64_t>(draw % range);
    }

    /// Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("index: n must be positive");
        return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
    }

    /// Uniform real in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool coin() { return (next_u64() >> 63) != 0; }

    /// Independent child stream; children of equal (seed, stream) pairs are equal.
    Rng split(std::uint64_t stream) const {
        return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace plumbing
