#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>

#include "perfluence/hash.hpp"

namespace perfluence {

/// splitmix64 stream. Hand-rolled so that draws are bit-identical across
/// standard libraries and platforms; std::*_distribution makes no such
/// promise.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool next_bool() { return (next_u64() & 1) != 0; }

    /// Uniform in [0, n) without modulo bias.
    std::uint64_t next_below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    /// Standard normal via Box-Muller. Consumes two uniforms per call.
    double next_normal() {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Lognormal draw parameterized by its mean: E[draw] == mean.
    double next_lognormal_mean(double mean, double sigma) {
        if (sigma <= 0) return mean;
        return mean * std::exp(sigma * next_normal() - 0.5 * sigma * sigma);
    }

    /// Pareto draw with scale x_m and tail exponent alpha (draw >= x_m).
    double next_pareto(double x_m, double alpha) {
        double u = next_double();
        return x_m * std::pow(1.0 - u, -1.0 / alpha);
    }

    /// Multiplicative measurement-noise factor with unit mean and the
    /// given coefficient of variation.
    double next_noise_factor(double cv) {
        if (cv <= 0) return 1.0;
        const double sigma = std::sqrt(std::log1p(cv * cv));
        return std::exp(sigma * next_normal() - 0.5 * sigma * sigma);
    }

  private:
    std::uint64_t state_;
};

/// Seed-splitting rule: every independent random stream derives its seed by
/// hashing the master seed with a stream tag and numeric ids. Simulation and
/// training are therefore schedule-independent (see the concurrency notes in
/// the README).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::initializer_list<std::uint64_t> ids = {}) {
    std::uint64_t h = mix64(master ^ fnv1a64(tag));
    for (std::uint64_t id : ids) h = mix64(h ^ id);
    return h;
}

} // namespace perfluence
