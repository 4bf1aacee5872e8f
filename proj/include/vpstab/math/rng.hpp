#pragma once

#include <cstdint>

#include "vpstab/core/vec3.hpp"

namespace vpstab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ stream with splitmix64 seeding. Self-contained so that
/// sampled ensembles are bit-identical across platforms and standard
/// libraries (std:: distributions do not guarantee that).
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    /// Independent substream for block `block` of a run seeded with `seed`;
    /// used to make parallel sampling deterministic under any thread count.
    static Rng stream(std::uint64_t seed, std::uint64_t block) {
        std::uint64_t sm = seed ^ (0x632be59bd9b4e019ULL * (block + 1));
        return Rng(splitmix64(sm));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0,1) with 53 random bits.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [a,b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Isotropic unit vector.
    Vec3 unit_vector() {
        const double c = 1.0 - 2.0 * uniform();        // cos(theta)
        const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        const double phi = 2.0 * 3.14159265358979323846 * uniform();
        return Vec3{s * std::cos(phi), s * std::sin(phi), c};
    }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    std::uint64_t s_[4];
};

}  // namespace vpstab
