#pragma once

#include <cstdint>

#include "poscal/types.hpp"

namespace poscal {

/// Counter-based deterministic generator (SplitMix64). Output i is a pure
/// function of (seed, i), so streams can be split or skipped without
/// sequential state, and identical seeds give identical draws on every
/// platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    /// Independent substream k of this generator.
    Rng substream(std::uint64_t k) const { return Rng(state_ ^ mix(k * 0xbf58476d1ce4e5b9ull + 1)); }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    /// Uniform draw strictly inside (0,1).
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    bool next_bernoulli(double p) { return next_unit() < p; }

    /// Pair of independent standard normals (Box-Muller).
    Vec2 next_gaussian_pair() {
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    double next_gaussian() { return next_gaussian_pair().x; }

    /// Laplace(0, b) draw via inverse CDF.
    double next_laplace(double b) {
        const double u = next_unit() - 0.5;
        const double s = (u < 0.0) ? -1.0 : 1.0;
        return -b * s * std::log(1.0 - 2.0 * std::abs(u));
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace poscal
