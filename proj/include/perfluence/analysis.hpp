#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perfluence/json.hpp"
#include "perfluence/stats.hpp"
#include "perfluence/traces.hpp"

namespace perfluence {

/// Dispersion of repeated identical runs: cv of the first k repetition
/// values for k = 2..K, plus a flag that the curve has settled near its
/// final value from the fifth repetition on.
struct CvCurve {
    std::vector<double> cv_by_k;  // entry i is cv of the first i+2 repetitions
    bool stable = true;
};

inline CvCurve measurement_cv_curve(const std::vector<double>& repetition_means) {
    if (repetition_means.size() < 2) throw DataError("cv curve needs at least 2 repetitions");
    CvCurve out;
    for (std::size_t k = 2; k <= repetition_means.size(); ++k)
        out.cv_by_k.push_back(
            cv(std::vector<double>(repetition_means.begin(), repetition_means.begin() + k)));
    const double final_cv = out.cv_by_k.back();
    for (std::size_t k = 5; k <= repetition_means.size(); ++k)
        if (std::abs(out.cv_by_k[k - 2] - final_cv) >= 0.01) out.stable = false;
    return out;
}

/// Dispersion across configurations of a method's mean times.
inline double configuration_cv(const MethodDataset& dataset) {
    if (dataset.rows.size() < 2) throw DataError("configuration cv needs at least 2 configurations");
    std::vector<double> times;
    times.reserve(dataset.rows.size());
    for (const auto& r : dataset.rows) times.push_back(r.time_ns);
    return cv(times);
}

inline bool classify_config_sensitive(double cv_value, double bound = 0.04) {
    return cv_value > bound;
}

struct ContextStats {
    LogHistogram histogram;
    double tail_share = 0.0;
};

/// Within-run distribution of one (configuration, repetition, method) group.
inline ContextStats context_stats(const std::vector<double>& durations) {
    if (durations.empty()) throw DataError("context stats need at least 1 call");
    ContextStats out;
    for (double d : durations) out.histogram.add(d);
    out.tail_share = tail_share(durations);
    return out;
}

struct PairedPoint {
    std::uint64_t config_id = 0;
    double unprofiled = 0.0;
    double profiled = 0.0;
};

struct CorrelationReport {
    std::optional<double> pearson;
    std::optional<double> spearman;
    std::vector<PairedPoint> series;  // ordered by config id
};

/// Pearson and Spearman between unprofiled (black-box) and profiled
/// per-configuration times. Degenerate zero-variance series leave the
/// coefficients unset.
inline CorrelationReport correlate(const std::map<std::uint64_t, double>& unprofiled,
                                   const std::map<std::uint64_t, double>& profiled) {
    if (unprofiled.size() != profiled.size())
        throw DataError("correlate: series cover different configuration sets");
    CorrelationReport out;
    std::vector<double> x, y;
    for (const auto& [id, u] : unprofiled) {
        auto it = profiled.find(id);
        if (it == profiled.end())
            throw DataError("correlate: configuration " + to_hex16(id) + " missing from one series");
        out.series.push_back({id, u, it->second});
        x.push_back(u);
        y.push_back(it->second);
    }
    if (x.size() < 3) throw DataError("correlate needs at least 3 configurations");
    out.pearson = pearson(x, y);
    out.spearman = spearman(x, y);
    return out;
}

struct MethodVariance {
    std::string method;
    double cv_measurement = 0.0;
    double cv_configuration = 0.0;
    bool sensitive = false;
    std::optional<double> mean_tail_share;
    std::optional<LogHistogram> context_histogram;
};

struct VarianceReport {
    double measurement_bound = 0.04;
    std::vector<MethodVariance> methods;  // sorted by method id
};

/// Per method: measurement cv (mean over configurations of the cv across
/// that configuration's repetitions) and configuration cv (cv across
/// per-configuration mean times). Fine-grained groups, when given,
/// contribute a merged context histogram and mean tail share.
inline VarianceReport build_variance_report(const ConfigurationSpace& space,
                                            const std::vector<Configuration>& configs,
                                            const std::vector<CoarseRecord>& records,
                                            const std::vector<FineGroupStats>* fine_groups = nullptr,
                                            double bound = 0.04) {
    VarianceReport out;
    out.measurement_bound = bound;

    // (method, config) -> per-repetition times
    std::map<std::string, std::map<std::uint64_t, std::vector<double>>> cells;
    for (const auto& r : records)
        cells[r.method][r.config_id].push_back(static_cast<double>(r.total_time_ns));

    auto datasets = aggregate_repetitions(space, configs, records);
    for (const auto& [method, ds] : datasets) {
        MethodVariance mv;
        mv.method = method;
        std::vector<double> per_config_cv;
        for (const auto& [id, times] : cells[method])
            if (times.size() >= 2 && mean(times) > 0.0) per_config_cv.push_back(cv(times));
        mv.cv_measurement = per_config_cv.empty() ? 0.0 : mean(per_config_cv);
        mv.cv_configuration = ds.rows.size() >= 2 ? configuration_cv(ds) : 0.0;
        mv.sensitive = classify_config_sensitive(mv.cv_configuration, bound);
        out.methods.push_back(std::move(mv));
    }

    if (fine_groups) {
        std::map<std::string, std::pair<LogHistogram, std::vector<double>>> merged;
        for (const auto& g : *fine_groups) {
            auto& slot = merged[g.method];
            for (std::size_t b = 0; b < LogHistogram::kBins; ++b)
                slot.first.counts[b] += g.histogram.counts[b];
            slot.second.push_back(g.tail_share);
        }
        for (auto& mv : out.methods) {
            auto it = merged.find(mv.method);
            if (it == merged.end()) continue;
            mv.context_histogram = it->second.first;
            mv.mean_tail_share = mean(it->second.second);
        }
    }
    return out;
}

inline json correlation_to_json(const CorrelationReport& r) {
    json doc;
    doc["pearson"] = r.pearson ? json(*r.pearson) : json(nullptr);
    doc["spearman"] = r.spearman ? json(*r.spearman) : json(nullptr);
    json series = json::array();
    for (const auto& p : r.series) {
        json jp;
        jp["config_id"] = to_hex16(p.config_id);
        jp["unprofiled"] = p.unprofiled;
        jp["profiled"] = p.profiled;
        series.push_back(std::move(jp));
    }
    doc["series"] = std::move(series);
    return doc;
}

inline json variance_report_to_json(const VarianceReport& r) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["measurement_bound"] = r.measurement_bound;
    json methods = json::array();
    for (const auto& m : r.methods) {
        json jm;
        jm["method"] = m.method;
        jm["cv_measurement"] = m.cv_measurement;
        jm["cv_configuration"] = m.cv_configuration;
        jm["sensitive"] = m.sensitive;
        if (m.mean_tail_share) jm["mean_tail_share"] = *m.mean_tail_share;
        if (m.context_histogram) {
            json bins = json::array();
            for (auto c : m.context_histogram->counts) bins.push_back(c);
            jm["context_histogram"] = std::move(bins);
        }
        methods.push_back(std::move(jm));
    }
    doc["methods"] = std::move(methods);
    return doc;
}

} // namespace perfluence
