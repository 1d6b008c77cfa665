#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "perfluence/configspace.hpp"
#include "perfluence/csvio.hpp"
#include "perfluence/stats.hpp"

namespace perfluence {

/// One per-run aggregate: total time and call count of a method within one
/// repetition of one configuration.
struct CoarseRecord {
    std::uint64_t config_id = 0;
    int repetition = 0;
    std::string method;
    std::uint64_t total_time_ns = 0;
    std::uint64_t call_count = 0;
};

/// One individual method execution from fine-grained instrumentation.
struct FineCallRecord {
    std::uint64_t config_id = 0;
    int repetition = 0;
    std::string method;
    std::uint64_t call_index = 0;
    std::uint64_t duration_ns = 0;
};

/// System-level wall time of one repetition (no instrumentation).
struct BlackboxRecord {
    std::uint64_t config_id = 0;
    int repetition = 0;
    std::uint64_t total_time_ns = 0;
};

struct DatasetRow {
    std::uint64_t config_id = 0;
    FeatureVector features;
    double time_ns = 0.0;
    double calls = 0.0;
};

/// Per-method learning matrix: one row per configuration with the
/// repetition-aggregated time and mean call count.
struct MethodDataset {
    std::string method;
    std::vector<DatasetRow> rows;
};

inline constexpr const char* kCoarseHeader = "config_id,repetition,method,total_time_ns,call_count";
inline constexpr const char* kFineHeader = "config_id,repetition,method,call_index,duration_ns";
inline constexpr const char* kBlackboxHeader = "config_id,repetition,total_time_ns";

namespace detail {

inline void check_method_id(const std::string& m) {
    if (m.empty()) throw DataError("empty method id");
    if (m.find(',') != std::string::npos)
        throw DataError("method id '" + m + "' contains a comma");
}

inline std::uint64_t parse_id_field(std::string_view s, const std::string& path, std::size_t line) {
    try {
        return parse_hex16(std::string(s));
    } catch (const FormatError& e) {
        throw FormatError(path + ":" + std::to_string(line) + ": " + e.what());
    }
}

inline void expect_header(LineCursor& cur, const char* want, const std::string& path) {
    std::string_view line;
    if (!cur.next(line) || line != want)
        throw FormatError(path + ": expected header '" + std::string(want) + "'");
}

} // namespace detail

inline std::vector<CoarseRecord> read_coarse(const std::string& path) {
    const std::string text = read_file(path);
    detail::LineCursor cur(text);
    detail::expect_header(cur, kCoarseHeader, path);
    std::vector<CoarseRecord> out;
    std::string_view line;
    while (cur.next(line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 5)
            throw FormatError(path + ":" + std::to_string(cur.line_no()) + ": expected 5 fields, got " +
                              std::to_string(f.size()));
        CoarseRecord r;
        r.config_id = detail::parse_id_field(f[0], path, cur.line_no());
        r.repetition = detail::parse_int_field<int>(f[1], path, cur.line_no(), "repetition");
        r.method = std::string(f[2]);
        r.total_time_ns =
            detail::parse_int_field<std::uint64_t>(f[3], path, cur.line_no(), "total_time_ns");
        r.call_count =
            detail::parse_int_field<std::uint64_t>(f[4], path, cur.line_no(), "call_count");
        if (r.method.empty())
            throw FormatError(path + ":" + std::to_string(cur.line_no()) + ": empty method id");
        if (r.call_count == 0 && r.total_time_ns != 0)
            throw FormatError(path + ":" + std::to_string(cur.line_no()) +
                              ": zero calls with non-zero time");
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<FineCallRecord> read_fine(const std::string& path) {
    const std::string text = read_file(path);
    detail::LineCursor cur(text);
    detail::expect_header(cur, kFineHeader, path);
    std::vector<FineCallRecord> out;
    std::string_view line;
    while (cur.next(line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 5)
            throw FormatError(path + ":" + std::to_string(cur.line_no()) + ": expected 5 fields, got " +
                              std::to_string(f.size()));
        FineCallRecord r;
        r.config_id = detail::parse_id_field(f[0], path, cur.line_no());
        r.repetition = detail::parse_int_field<int>(f[1], path, cur.line_no(), "repetition");
        r.method = std::string(f[2]);
        r.call_index = detail::parse_int_field<std::uint64_t>(f[3], path, cur.line_no(), "call_index");
        r.duration_ns =
            detail::parse_int_field<std::uint64_t>(f[4], path, cur.line_no(), "duration_ns");
        if (r.method.empty())
            throw FormatError(path + ":" + std::to_string(cur.line_no()) + ": empty method id");
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<BlackboxRecord> read_blackbox(const std::string& path) {
    const std::string text = read_file(path);
    detail::LineCursor cur(text);
    detail::expect_header(cur, kBlackboxHeader, path);
    std::vector<BlackboxRecord> out;
    std::string_view line;
    while (cur.next(line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 3)
            throw FormatError(path + ":" + std::to_string(cur.line_no()) + ": expected 3 fields, got " +
                              std::to_string(f.size()));
        BlackboxRecord r;
        r.config_id = detail::parse_id_field(f[0], path, cur.line_no());
        r.repetition = detail::parse_int_field<int>(f[1], path, cur.line_no(), "repetition");
        r.total_time_ns =
            detail::parse_int_field<std::uint64_t>(f[2], path, cur.line_no(), "total_time_ns");
        out.push_back(r);
    }
    return out;
}

inline void write_coarse(const std::string& path, const std::vector<CoarseRecord>& records) {
    std::string out(kCoarseHeader);
    out.push_back('\n');
    for (const auto& r : records) {
        detail::check_method_id(r.method);
        if (r.call_count == 0 && r.total_time_ns != 0)
            throw DataError("zero calls with non-zero time for method '" + r.method + "'");
        out += to_hex16(r.config_id);
        out += ',' + std::to_string(r.repetition) + ',' + r.method + ',' +
               std::to_string(r.total_time_ns) + ',' + std::to_string(r.call_count) + '\n';
    }
    write_file(path, out);
}

inline void write_fine(const std::string& path, const std::vector<FineCallRecord>& records) {
    std::string out(kFineHeader);
    out.push_back('\n');
    for (const auto& r : records) {
        detail::check_method_id(r.method);
        out += to_hex16(r.config_id);
        out += ',' + std::to_string(r.repetition) + ',' + r.method + ',' +
               std::to_string(r.call_index) + ',' + std::to_string(r.duration_ns) + '\n';
    }
    write_file(path, out);
}

inline void write_blackbox(const std::string& path, const std::vector<BlackboxRecord>& records) {
    std::string out(kBlackboxHeader);
    out.push_back('\n');
    for (const auto& r : records) {
        out += to_hex16(r.config_id);
        out += ',' + std::to_string(r.repetition) + ',' + std::to_string(r.total_time_ns) + '\n';
    }
    write_file(path, out);
}

inline std::set<std::uint64_t> covered_configs(const std::vector<CoarseRecord>& records) {
    std::set<std::uint64_t> ids;
    for (const auto& r : records) ids.insert(r.config_id);
    return ids;
}

/// Per (config, method): mean time and mean call count across the
/// configuration's repetitions. A method absent from a repetition counts as
/// 0 there; a method absent from a configuration entirely gets a zero row
/// (configuration-dependent dead code). Records for configurations outside
/// `configs` are ignored.
inline std::map<std::string, MethodDataset> aggregate_repetitions(
    const ConfigurationSpace& space, const std::vector<Configuration>& configs,
    const std::vector<CoarseRecord>& records) {
    std::map<std::uint64_t, std::size_t> config_pos;
    for (std::size_t i = 0; i < configs.size(); ++i) config_pos[configs[i].id] = i;

    std::map<std::uint64_t, std::set<int>> reps_of;
    std::set<std::string> methods;
    // (method, config position, repetition) -> (time, count)
    std::map<std::tuple<std::string, std::size_t, int>, std::pair<double, double>> cells;
    for (const auto& r : records) {
        auto it = config_pos.find(r.config_id);
        if (it == config_pos.end()) continue;
        reps_of[r.config_id].insert(r.repetition);
        methods.insert(r.method);
        auto& cell = cells[{r.method, it->second, r.repetition}];
        cell.first += static_cast<double>(r.total_time_ns);
        cell.second += static_cast<double>(r.call_count);
    }

    std::map<std::string, MethodDataset> out;
    for (const auto& m : methods) {
        MethodDataset ds;
        ds.method = m;
        for (std::size_t i = 0; i < configs.size(); ++i) {
            DatasetRow row;
            row.config_id = configs[i].id;
            row.features = encode(space, configs[i]);
            const auto& reps = reps_of[configs[i].id];
            if (!reps.empty()) {
                double t = 0.0, c = 0.0;
                for (int rep : reps) {
                    auto it = cells.find({m, i, rep});
                    if (it != cells.end()) {
                        t += it->second.first;
                        c += it->second.second;
                    }
                }
                row.time_ns = t / static_cast<double>(reps.size());
                row.calls = c / static_cast<double>(reps.size());
            }
            ds.rows.push_back(std::move(row));
        }
        out.emplace(m, std::move(ds));
    }
    return out;
}

namespace detail {

using FineGroupKey = std::tuple<std::uint64_t, int, std::string>;

inline std::map<FineGroupKey, std::vector<const FineCallRecord*>> group_fine(
    const std::vector<FineCallRecord>& calls) {
    std::map<FineGroupKey, std::vector<const FineCallRecord*>> groups;
    for (const auto& r : calls) groups[{r.config_id, r.repetition, r.method}].push_back(&r);
    for (auto& [key, recs] : groups) {
        std::sort(recs.begin(), recs.end(),
                  [](const FineCallRecord* a, const FineCallRecord* b) {
                      return a->call_index < b->call_index;
                  });
        for (std::size_t i = 1; i < recs.size(); ++i)
            if (recs[i]->call_index == recs[i - 1]->call_index)
                throw DataError("duplicate call index " + std::to_string(recs[i]->call_index) +
                                " for method '" + std::get<2>(key) + "' in configuration " +
                                to_hex16(std::get<0>(key)));
    }
    return groups;
}

} // namespace detail

/// Drops the ceil(tail_fraction * n) longest calls within each
/// (configuration, repetition, method) group; among equal durations the
/// higher call index is dropped first. Output is sorted by group then call
/// index.
inline std::vector<FineCallRecord> filter_outliers(const std::vector<FineCallRecord>& calls,
                                                   double tail_fraction = 0.01) {
    if (!(tail_fraction >= 0.0 && tail_fraction < 0.5))
        throw UsageError("tail fraction must be in [0, 0.5)");
    auto groups = detail::group_fine(calls);
    std::vector<FineCallRecord> out;
    out.reserve(calls.size());
    for (auto& [key, recs] : groups) {
        const auto n = recs.size();
        const auto k =
            static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n)));
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (recs[a]->duration_ns != recs[b]->duration_ns)
                return recs[a]->duration_ns < recs[b]->duration_ns;
            return recs[a]->call_index < recs[b]->call_index;
        });
        std::vector<bool> drop(n, false);
        for (std::size_t i = n - std::min(k, n); i < n; ++i) drop[order[i]] = true;
        for (std::size_t i = 0; i < n; ++i)
            if (!drop[i]) out.push_back(*recs[i]);
    }
    return out;
}

/// Distribution summary of one (configuration, repetition, method) group,
/// kept for context-variance reporting.
struct FineGroupStats {
    std::uint64_t config_id = 0;
    int repetition = 0;
    std::string method;
    std::uint64_t calls = 0;
    LogHistogram histogram;
    double tail_share = 0.0;
};

struct FineSummary {
    std::map<std::string, MethodDataset> datasets;
    std::vector<FineGroupStats> groups;
};

/// Per (config, method): durations summed within each repetition, then
/// averaged across the configuration's repetitions; call count averaged the
/// same way. Expects already-filtered calls.
inline FineSummary summarize_fine(const ConfigurationSpace& space,
                                  const std::vector<Configuration>& configs,
                                  const std::vector<FineCallRecord>& calls) {
    std::map<std::uint64_t, std::size_t> config_pos;
    for (std::size_t i = 0; i < configs.size(); ++i) config_pos[configs[i].id] = i;

    auto groups = detail::group_fine(calls);
    std::map<std::uint64_t, std::set<int>> reps_of;
    std::set<std::string> methods;
    std::map<std::tuple<std::string, std::size_t, int>, std::pair<double, double>> cells;
    FineSummary out;
    for (const auto& [key, recs] : groups) {
        const auto& [cfg_id, rep, method] = key;
        auto it = config_pos.find(cfg_id);
        if (it == config_pos.end()) continue;
        reps_of[cfg_id].insert(rep);
        methods.insert(method);
        double sum = 0.0;
        FineGroupStats gs;
        gs.config_id = cfg_id;
        gs.repetition = rep;
        gs.method = method;
        gs.calls = recs.size();
        std::vector<double> durations;
        durations.reserve(recs.size());
        for (const auto* r : recs) {
            sum += static_cast<double>(r->duration_ns);
            gs.histogram.add(static_cast<double>(r->duration_ns));
            durations.push_back(static_cast<double>(r->duration_ns));
        }
        gs.tail_share = tail_share(std::move(durations));
        out.groups.push_back(std::move(gs));
        cells[{method, it->second, rep}] = {sum, static_cast<double>(recs.size())};
    }
    std::sort(out.groups.begin(), out.groups.end(), [](const FineGroupStats& a, const FineGroupStats& b) {
        return std::tie(a.method, a.config_id, a.repetition) <
               std::tie(b.method, b.config_id, b.repetition);
    });

    for (const auto& m : methods) {
        MethodDataset ds;
        ds.method = m;
        for (std::size_t i = 0; i < configs.size(); ++i) {
            DatasetRow row;
            row.config_id = configs[i].id;
            row.features = encode(space, configs[i]);
            const auto& reps = reps_of[configs[i].id];
            if (!reps.empty()) {
                double t = 0.0, c = 0.0;
                for (int rep : reps) {
                    auto it = cells.find({m, i, rep});
                    if (it != cells.end()) {
                        t += it->second.first;
                        c += it->second.second;
                    }
                }
                row.time_ns = t / static_cast<double>(reps.size());
                row.calls = c / static_cast<double>(reps.size());
            }
            ds.rows.push_back(std::move(row));
        }
        out.datasets.emplace(m, std::move(ds));
    }
    return out;
}

} // namespace perfluence
