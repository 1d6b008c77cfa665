#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <vector>

#include "perfluence/errors.hpp"

namespace perfluence {

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw DataError("mean of empty sequence");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double population_stddev(const std::vector<double>& v) {
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

/// Coefficient of variation (population stddev over mean). An all-zero
/// series is defined as 0 so dead methods do not pollute rankings.
inline double cv(const std::vector<double>& v) {
    if (v.empty()) throw DataError("cv of empty sequence");
    const double m = mean(v);
    if (m == 0.0) {
        for (double x : v)
            if (x != 0.0) throw DataError("cv undefined: zero mean with non-zero values");
        return 0.0;
    }
    return population_stddev(v) / m;
}

inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DataError("pearson needs two equal-length series");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Average ranks (1-based); ties share the mean of their rank positions.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DataError("spearman needs two equal-length series");
    return pearson(average_ranks(x), average_ranks(y));
}

/// Fixed 64-bin log-spaced duration histogram from 1 microsecond to 100
/// seconds (8 bins per decade); out-of-range durations clamp to the edge bins.
struct LogHistogram {
    static constexpr std::size_t kBins = 64;
    static constexpr double kLo = 1e3;   // ns
    static constexpr double kHi = 1e11;  // ns
    std::array<std::uint64_t, kBins> counts{};

    static std::size_t bin_of(double duration_ns) {
        if (duration_ns <= kLo) return 0;
        if (duration_ns >= kHi) return kBins - 1;
        const double t = (std::log10(duration_ns) - std::log10(kLo)) /
                         (std::log10(kHi) - std::log10(kLo));
        auto b = static_cast<std::size_t>(t * kBins);
        return b >= kBins ? kBins - 1 : b;
    }

    void add(double duration_ns) { ++counts[bin_of(duration_ns)]; }

    static double bin_lower(std::size_t b) {
        return std::pow(10.0, std::log10(kLo) + (std::log10(kHi) - std::log10(kLo)) *
                                                    static_cast<double>(b) / kBins);
    }

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (auto c : counts) n += c;
        return n;
    }
};

/// Fraction of total time spent in the ceil(tail_fraction * n) longest calls.
inline double tail_share(std::vector<double> durations, double tail_fraction = 0.01) {
    if (durations.empty()) throw DataError("tail_share of empty sequence");
    const auto n = durations.size();
    const auto k = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n)));
    if (k == 0) return 0.0;
    std::sort(durations.begin(), durations.end());
    const double total = std::accumulate(durations.begin(), durations.end(), 0.0);
    if (total == 0.0) return 0.0;
    double top = 0.0;
    for (std::size_t i = n - std::min(k, n); i < n; ++i) top += durations[i];
    return top / total;
}

} // namespace perfluence
