#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "perfluence/configspace.hpp"
#include "perfluence/rng.hpp"

namespace perfluence {

enum class SampleStrategy { FeatureWise, PairWise, Random, Composed };

inline const char* strategy_name(SampleStrategy s) {
    switch (s) {
        case SampleStrategy::FeatureWise: return "feature_wise";
        case SampleStrategy::PairWise: return "pair_wise";
        case SampleStrategy::Random: return "random";
        case SampleStrategy::Composed: return "composed";
    }
    return "?";
}

/// An ordered, duplicate-free learning or test set. `skipped` records
/// options, pairs, or combinations that could not be realized.
struct SampleSet {
    SampleStrategy strategy = SampleStrategy::FeatureWise;
    std::vector<Configuration> configurations;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> skipped;

    bool contains(std::uint64_t id) const {
        for (const auto& c : configurations)
            if (c.id == id) return true;
        return false;
    }
};

inline std::size_t round_half_up_index(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

/// Middle of a numeric domain, using the same round-half-up rule as the
/// design level quantiles. Numeric options are held here in binary-only
/// sample sets.
inline double design_center(const OptionDef& o) {
    return o.domain[round_half_up_index((o.domain.size() - 1) / 2.0)];
}

namespace detail {

inline Assignment numeric_centers(const ConfigurationSpace& space) {
    Assignment a;
    for (const auto& o : space.options())
        if (o.kind == OptionKind::Numeric) a[o.name] = design_center(o);
    return a;
}

inline bool push_unique(SampleSet& set, Configuration cfg, std::set<std::uint64_t>& seen) {
    if (!seen.insert(cfg.id).second) return false;
    set.configurations.push_back(std::move(cfg));
    return true;
}

} // namespace detail

/// One base configuration (all binary options off, completed to validity)
/// plus one configuration per binary option with that option enabled.
/// Numeric options are held at their design center.
inline SampleSet sample_feature_wise(const ConfigurationSpace& space) {
    SampleSet out;
    out.strategy = SampleStrategy::FeatureWise;
    const Assignment centers = detail::numeric_centers(space);
    std::set<std::uint64_t> seen;
    detail::push_unique(out, find_valid(space, centers), seen);
    for (const auto& o : space.options()) {
        if (o.kind != OptionKind::Binary) continue;
        Assignment req = centers;
        req[o.name] = 1.0;
        try {
            detail::push_unique(out, find_valid(space, req), seen);
        } catch (const UnsatError&) {
            out.skipped.push_back("option '" + o.name + "' cannot be enabled");
        }
    }
    return out;
}

/// Feature-wise set extended so that every satisfiable pair of binary
/// options is enabled together in some configuration. Pairs already covered
/// by an earlier configuration are not realized again.
inline SampleSet sample_pair_wise(const ConfigurationSpace& space) {
    SampleSet out = sample_feature_wise(space);
    out.strategy = SampleStrategy::PairWise;
    const Assignment centers = detail::numeric_centers(space);
    std::set<std::uint64_t> seen;
    for (const auto& c : out.configurations) seen.insert(c.id);

    std::vector<std::size_t> binary_idx;
    for (std::size_t i = 0; i < space.size(); ++i)
        if (space.options()[i].kind == OptionKind::Binary) binary_idx.push_back(i);

    for (std::size_t a = 0; a < binary_idx.size(); ++a) {
        for (std::size_t b = a + 1; b < binary_idx.size(); ++b) {
            const std::size_t i = binary_idx[a], j = binary_idx[b];
            bool covered = false;
            for (const auto& c : out.configurations)
                if (c.values[i] == 1.0 && c.values[j] == 1.0) {
                    covered = true;
                    break;
                }
            if (covered) continue;
            Assignment req = centers;
            req[space.options()[i].name] = 1.0;
            req[space.options()[j].name] = 1.0;
            try {
                detail::push_unique(out, find_valid(space, req), seen);
            } catch (const UnsatError&) {
                out.skipped.push_back("pair (" + space.options()[i].name + ", " +
                                      space.options()[j].name + ") is unsatisfiable");
            }
        }
    }
    return out;
}

/// Level-index matrix assigning each numeric option a level per run.
struct NumericDesign {
    std::vector<std::string> option_names;
    std::vector<std::vector<int>> rows;        // level indices, one row per run
    std::vector<std::vector<double>> levels;   // per option, the level values
};

struct DesignSpec {
    int runs = 9;
    int levels = 3;
};

namespace detail {

// Pinned seed rows for the supported designs. Each row has length runs-1 and
// level counts chosen so that every column of the rotation matrix plus the
// final all-zero run contains each level exactly runs/levels times.
inline const std::vector<int>& pb_seed_row(int runs, int levels) {
    static const std::vector<int> s9_3 = {2, 1, 0, 0, 2, 2, 1, 1};
    static const std::vector<int> s27_3 = {1, 0, 2, 1, 0, 0, 2, 1, 1, 2, 2, 1, 0,
                                           2, 1, 2, 0, 0, 1, 1, 1, 0, 2, 0, 2, 2};
    static const std::vector<int> s25_5 = {3, 1, 3, 0, 1, 2, 4, 1, 4, 4, 0, 2,
                                           1, 2, 0, 3, 2, 2, 3, 3, 4, 0, 4, 1};
    static const std::vector<int> s125_5 = {
        0, 4, 1, 0, 1, 1, 3, 4, 0, 3, 1, 2, 4, 4, 2, 4, 0, 3, 0, 3, 0, 1, 1, 1, 1,
        2, 2, 4, 0, 4, 1, 2, 0, 2, 0, 2, 3, 1, 4, 0, 1, 3, 4, 4, 3, 0, 0, 2, 1, 2,
        2, 2, 1, 2, 0, 4, 1, 4, 3, 3, 4, 4, 0, 4, 1, 3, 3, 1, 2, 3, 4, 3, 0, 2, 2,
        0, 0, 0, 2, 3, 3, 2, 3, 4, 0, 4, 3, 1, 1, 3, 4, 1, 3, 2, 4, 1, 1, 0, 0, 2,
        1, 4, 2, 0, 4, 4, 3, 3, 2, 3, 4, 2, 0, 2, 1, 4, 0, 2, 2, 1, 3, 1, 3, 3};
    if (runs == 9 && levels == 3) return s9_3;
    if (runs == 27 && levels == 3) return s27_3;
    if (runs == 25 && levels == 5) return s25_5;
    if (runs == 125 && levels == 5) return s125_5;
    throw UsageError("unsupported design " + std::to_string(runs) + "x" + std::to_string(levels) +
                     "; supported: 9x3, 27x3, 25x5, 125x5");
}

} // namespace detail

/// Cyclic design for numeric options: runs-1 rotations of the pinned seed row
/// plus an all-zero run, truncated to the option count. Level k of an option
/// maps to domain index round_half_up(k * (|domain|-1) / (levels-1)).
inline NumericDesign plackett_burman(const std::vector<OptionDef>& numeric_options,
                                     DesignSpec design) {
    NumericDesign out;
    if (numeric_options.empty()) {
        out.rows.push_back({});
        return out;
    }
    const std::vector<int>& seed = detail::pb_seed_row(design.runs, design.levels);
    const std::size_t m = numeric_options.size();
    if (m > seed.size())
        throw UsageError("design " + std::to_string(design.runs) + "x" +
                         std::to_string(design.levels) + " supports at most " +
                         std::to_string(seed.size()) + " numeric options, got " +
                         std::to_string(m));
    for (const auto& o : numeric_options) {
        if (o.kind != OptionKind::Numeric)
            throw DataError("option '" + o.name + "' is not numeric");
        out.option_names.push_back(o.name);
        std::vector<double> vals;
        for (int k = 0; k < design.levels; ++k) {
            std::size_t idx = round_half_up_index(static_cast<double>(k) *
                                                  static_cast<double>(o.domain.size() - 1) /
                                                  static_cast<double>(design.levels - 1));
            vals.push_back(o.domain[idx]);
        }
        out.levels.push_back(std::move(vals));
    }
    for (int r = 0; r < design.runs - 1; ++r) {
        std::vector<int> row(m);
        for (std::size_t c = 0; c < m; ++c) row[c] = seed[(c + r) % seed.size()];
        out.rows.push_back(std::move(row));
    }
    out.rows.push_back(std::vector<int>(m, 0));
    return out;
}

/// Crosses a binary sample set with a numeric design. Invalid combinations
/// are dropped and recorded; an empty design leaves the set unchanged.
inline SampleSet compose_samples(const SampleSet& binary_set, const NumericDesign& design,
                                 const ConfigurationSpace& space) {
    if (design.option_names.empty()) return binary_set;
    SampleSet out;
    out.strategy = SampleStrategy::Composed;
    out.seed = binary_set.seed;
    out.skipped = binary_set.skipped;
    std::vector<std::size_t> opt_idx;
    for (const auto& name : design.option_names) opt_idx.push_back(space.option_index(name));
    std::set<std::uint64_t> seen;
    for (const auto& base : binary_set.configurations) {
        for (std::size_t r = 0; r < design.rows.size(); ++r) {
            std::vector<double> values = base.values;
            for (std::size_t c = 0; c < opt_idx.size(); ++c)
                values[opt_idx[c]] = design.levels[c][design.rows[r][c]];
            Configuration cfg;
            cfg.values = std::move(values);
            if (!validate(space, to_assignment(space, cfg))) {
                out.skipped.push_back("combination of " + to_hex16(base.id) + " with design row " +
                                      std::to_string(r) + " is invalid");
                continue;
            }
            cfg.id = config_id(space, cfg.values);
            detail::push_unique(out, std::move(cfg), seen);
        }
    }
    return out;
}

/// k distinct valid configurations drawn uniformly by rejection; optionally
/// excludes an existing set so test configurations stay fresh.
inline SampleSet sample_random(const ConfigurationSpace& space, std::size_t k,
                               std::uint64_t seed, const SampleSet* exclude = nullptr) {
    if (k < 1) throw UsageError("random sample size must be >= 1");
    std::set<std::uint64_t> taken;
    if (exclude)
        for (const auto& c : exclude->configurations) taken.insert(c.id);

    // Exact feasibility check for small spaces.
    if (space.candidate_count() <= (1u << 16)) {
        auto all = enumerate_valid(space);
        std::size_t fresh = 0;
        for (const auto& c : all)
            if (!taken.count(c.id)) ++fresh;
        if (k > fresh)
            throw DegenerateError("requested " + std::to_string(k) + " fresh configurations but only " +
                                  std::to_string(fresh) + " exist");
    }

    SampleSet out;
    out.strategy = SampleStrategy::Random;
    out.seed = seed;
    SplitMix64 rng(derive_seed(seed, "sample_random"));
    const std::uint64_t budget = 100000 + 10000ull * k;
    std::uint64_t attempts = 0;
    while (out.configurations.size() < k) {
        if (++attempts > budget)
            throw DegenerateError("rejection sampling exhausted after " + std::to_string(budget) +
                                  " attempts; the space may have too few fresh configurations");
        std::vector<double> values(space.size());
        for (std::size_t i = 0; i < space.size(); ++i) {
            const OptionDef& o = space.options()[i];
            values[i] = o.kind == OptionKind::Binary
                            ? (rng.next_bool() ? 1.0 : 0.0)
                            : o.domain[rng.next_below(o.domain.size())];
        }
        Configuration cfg;
        cfg.values = std::move(values);
        if (!validate(space, to_assignment(space, cfg))) continue;
        cfg.id = config_id(space, cfg.values);
        if (taken.count(cfg.id)) continue;
        taken.insert(cfg.id);
        out.configurations.push_back(std::move(cfg));
    }
    return out;
}

// --- sample set files (JSON) ---

inline json sample_set_to_json(const ConfigurationSpace& space, const SampleSet& set) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["strategy"] = strategy_name(set.strategy);
    if (set.seed)
        doc["seed"] = *set.seed;
    else
        doc["seed"] = nullptr;
    json cfgs = json::array();
    for (const auto& c : set.configurations) {
        json jc;
        jc["id"] = to_hex16(c.id);
        jc["assignment"] = assignment_to_json(space, c);
        cfgs.push_back(std::move(jc));
    }
    doc["configurations"] = std::move(cfgs);
    doc["skipped"] = set.skipped;
    return doc;
}

inline SampleSet sample_set_from_json(const ConfigurationSpace& space, const json& doc) {
    if (!doc.is_object() || !doc.contains("configurations"))
        throw FormatError("sample set file must contain 'configurations'");
    SampleSet set;
    std::string strat = doc.value("strategy", "random");
    if (strat == "feature_wise") set.strategy = SampleStrategy::FeatureWise;
    else if (strat == "pair_wise") set.strategy = SampleStrategy::PairWise;
    else if (strat == "random") set.strategy = SampleStrategy::Random;
    else if (strat == "composed") set.strategy = SampleStrategy::Composed;
    else throw FormatError("unknown strategy '" + strat + "'");
    if (doc.contains("seed") && doc["seed"].is_number())
        set.seed = doc["seed"].get<std::uint64_t>();
    std::set<std::uint64_t> seen;
    for (const auto& jc : doc["configurations"]) {
        if (!jc.contains("assignment"))
            throw FormatError("configuration entry is missing 'assignment'");
        Configuration cfg = configuration_from_json(space, jc["assignment"]);
        if (jc.contains("id") && jc["id"].get<std::string>() != to_hex16(cfg.id))
            throw FormatError("configuration id '" + jc["id"].get<std::string>() +
                              "' does not match its assignment (expected " + to_hex16(cfg.id) +
                              "); wrong space file?");
        if (!seen.insert(cfg.id).second)
            throw FormatError("duplicate configuration " + to_hex16(cfg.id));
        set.configurations.push_back(std::move(cfg));
    }
    if (doc.contains("skipped"))
        for (const auto& s : doc["skipped"]) set.skipped.push_back(s.get<std::string>());
    return set;
}

} // namespace perfluence
