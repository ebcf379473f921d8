// Deterministic random utilities. mt19937_64 is fully specified by the
// standard and Box-Muller avoids the implementation-defined
// std::normal_distribution, so identical seeds reproduce identical streams.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "roistereo/types.hpp"

namespace roistereo {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stable way to derive independent sub-seeds from (seed, tags).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
    std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    h = splitmix64(h ^ c);
    return h;
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1).
    Scalar uniform() {
        return static_cast<Scalar>(engine_() >> 11) * 0x1.0p-53;
    }

    Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; caches the second draw.
    Scalar gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        Scalar u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const Scalar u2 = uniform();
        const Scalar r = std::sqrt(-2.0 * std::log(u1));
        const Scalar theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    Scalar gaussian(Scalar mean, Scalar sigma) { return mean + sigma * gaussian(); }

    std::uint64_t next_u64() { return engine_(); }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

  private:
    std::mt19937_64 engine_;
    Scalar spare_ = 0.0;
    bool has_spare_ = false;
};

// Smooth 2-D value noise in [-1, 1], keyed entirely by integer hashes so the
// field is a pure deterministic function of (key, position). Lipschitz with
// constant on the order of the lattice frequency.
namespace noise {

inline Scalar lattice_value(std::uint64_t key, std::int64_t ix, std::int64_t iy) {
    const std::uint64_t h = mix_seed(key, static_cast<std::uint64_t>(ix) * 0x9e3779b9ULL,
                                     static_cast<std::uint64_t>(iy) * 0x85ebca6bULL);
    return static_cast<Scalar>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

inline Scalar smoothstep(Scalar t) { return t * t * (3.0 - 2.0 * t); }

inline Scalar value_noise(std::uint64_t key, Scalar x, Scalar y) {
    const Scalar fx = std::floor(x);
    const Scalar fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const Scalar tx = smoothstep(x - fx);
    const Scalar ty = smoothstep(y - fy);
    const Scalar v00 = lattice_value(key, ix, iy);
    const Scalar v10 = lattice_value(key, ix + 1, iy);
    const Scalar v01 = lattice_value(key, ix, iy + 1);
    const Scalar v11 = lattice_value(key, ix + 1, iy + 1);
    const Scalar a = v00 + (v10 - v00) * tx;
    const Scalar b = v01 + (v11 - v01) * tx;
    return a + (b - a) * ty;
}

// Two octaves keep the field smooth enough for bilinear resampling while
// staying discriminative across the surface.
inline Scalar fbm2(std::uint64_t key, Scalar x, Scalar y) {
    return value_noise(key, x, y) + 0.35 * value_noise(splitmix64(key), 2.0 * x + 17.0, 2.0 * y - 9.0);
}

}  // namespace noise

}  // namespace roistereo
