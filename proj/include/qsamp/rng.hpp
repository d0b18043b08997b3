// Deterministic random streams (PCG32). std::* distributions are not used
// because their output is implementation-defined; datasets must be
// byte-identical across platforms for a given seed.
#pragma once

#include <cmath>
#include <cstdint>

#include "qsamp/vec3.hpp"

namespace qsamp {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

class Rng {
  public:
    explicit Rng(uint64_t seed, uint64_t stream = 0) : seed_(seed), stream_(stream) {
        state_ = 0;
        inc_ = (splitmix64(stream ^ 0xDA3E39CB94B95BDBull) << 1u) | 1u;
        next_u32();
        state_ += splitmix64(seed);
        next_u32();
    }

    // Independent substream; chunk/component i of a parallelizable task uses split(i).
    Rng split(uint64_t i) const { return Rng(seed_, splitmix64(stream_ + 1) + i); }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ull + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    uint64_t next_u64() {
        uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // avoid log(0)
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Vec3 uniform_box() { return {uniform(-kBoxHalf, kBoxHalf), uniform(-kBoxHalf, kBoxHalf), uniform(-kBoxHalf, kBoxHalf)}; }

    // Uniform direction on the unit sphere.
    Vec3 unit_vector() {
        double z = uniform(-1.0, 1.0);
        double a = uniform(0.0, 2.0 * 3.14159265358979323846);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {r * std::cos(a), r * std::sin(a), z};
    }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        // modulo bias negligible for our n << 2^64; keep it simple and portable
        return next_u64() % n;
    }

  private:
    uint64_t state_{}, inc_{}, seed_{}, stream_{};
    double spare_{};
    bool has_spare_ = false;
};

}  // namespace qsamp
