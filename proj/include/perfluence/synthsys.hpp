#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "perfluence/configspace.hpp"
#include "perfluence/rng.hpp"
#include "perfluence/traces.hpp"

namespace perfluence {

struct LinearTerm {
    std::size_t option = 0;  // binary option index
    double coeff = 0.0;
};

struct PairTerm {
    std::size_t a = 0;
    std::size_t b = 0;
    double coeff = 0.0;
};

struct NumericTerm {
    std::size_t option = 0;  // numeric option index
    double coeff = 0.0;
    int exponent = 1;  // over the domain-normalized value, 1 or 2
};

/// intercept + sum of binary, pairwise, and numeric-response terms.
struct InfluenceFunction {
    double intercept = 0.0;
    std::vector<LinearTerm> linear;
    std::vector<PairTerm> pairs;
    std::vector<NumericTerm> numeric;
};

inline double normalized_value(const ConfigurationSpace& space, std::size_t option, double v) {
    const auto& dom = space.options()[option].domain;
    if (dom.size() < 2) return 0.0;
    return (v - dom.front()) / (dom.back() - dom.front());
}

inline double eval_influence(const InfluenceFunction& f, const ConfigurationSpace& space,
                             const std::vector<double>& values) {
    double out = f.intercept;
    for (const auto& t : f.linear) out += t.coeff * values[t.option];
    for (const auto& t : f.pairs) out += t.coeff * values[t.a] * values[t.b];
    for (const auto& t : f.numeric) {
        const double x = normalized_value(space, t.option, values[t.option]);
        out += t.coeff * (t.exponent == 2 ? x * x : x);
    }
    return out;
}

/// Ground truth for one method: per-call time and call-count functions plus
/// the context-noise shape (lognormal body, optional Pareto contamination).
struct MethodTruth {
    std::string name;
    InfluenceFunction time_per_call;  // ns
    InfluenceFunction call_count;     // calls per run
    double sigma = 0.0;               // lognormal shape parameter
    double contamination_p = 0.0;     // per-call probability of a tail draw
    double pareto_alpha = 1.1;
};

/// A fully known configurable system: the oracle the learners are tested
/// against. Coarse totals get the coarse overhead factor and the per-option
/// overhead slopes; fine durations get the fine factor; black-box times get
/// neither.
struct GroundTruthSystem {
    ConfigurationSpace space;
    std::vector<MethodTruth> methods;
    double measurement_cv = 0.0;
    double coarse_factor = 1.0;
    double fine_factor = 1.0;
    std::map<std::size_t, double> overhead_slopes;  // option index -> slope per raw value
};

inline double expected_per_call(const GroundTruthSystem& sys, std::size_t method,
                                const Configuration& cfg) {
    return eval_influence(sys.methods[method].time_per_call, sys.space, cfg.values);
}

inline std::uint64_t true_calls(const GroundTruthSystem& sys, std::size_t method,
                                const Configuration& cfg) {
    const double c = eval_influence(sys.methods[method].call_count, sys.space, cfg.values);
    return c <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(c));
}

/// Noiseless oracle: expected per-call time times expected call count.
inline double true_perf(const GroundTruthSystem& sys, std::size_t method,
                        const Configuration& cfg) {
    return expected_per_call(sys, method, cfg) * static_cast<double>(true_calls(sys, method, cfg));
}

inline double true_blackbox(const GroundTruthSystem& sys, const Configuration& cfg) {
    double sum = 0.0;
    for (std::size_t m = 0; m < sys.methods.size(); ++m) sum += true_perf(sys, m, cfg);
    return sum;
}

inline double overhead_factor(const GroundTruthSystem& sys, const Configuration& cfg) {
    double f = 1.0;
    for (const auto& [opt, slope] : sys.overhead_slopes) f += slope * cfg.values[opt];
    return sys.coarse_factor * f;
}

namespace detail {

inline double draw_call(SplitMix64& rng, double mu, const MethodTruth& m) {
    const double u = rng.next_double();
    if (u < m.contamination_p) return rng.next_pareto(10.0 * mu, m.pareto_alpha);
    return rng.next_lognormal_mean(mu, m.sigma);
}

/// Per-call body draws for one (method, configuration, repetition) stream.
/// Coarse and fine simulation share this stream so their sums agree up to
/// the overhead factors.
inline std::vector<double> simulate_calls(const GroundTruthSystem& sys, std::size_t method,
                                          const Configuration& cfg, int repetition,
                                          std::uint64_t seed) {
    const MethodTruth& m = sys.methods[method];
    const std::uint64_t n = true_calls(sys, method, cfg);
    const double mu = expected_per_call(sys, method, cfg);
    SplitMix64 rng(derive_seed(seed, "calls", {method, cfg.id, static_cast<std::uint64_t>(repetition)}));
    std::vector<double> out;
    out.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(draw_call(rng, mu, m));
    return out;
}

inline double measurement_noise(const GroundTruthSystem& sys, const char* tag, std::size_t method,
                                const Configuration& cfg, int repetition, std::uint64_t seed) {
    SplitMix64 rng(derive_seed(seed, tag, {method, cfg.id, static_cast<std::uint64_t>(repetition)}));
    return rng.next_noise_factor(sys.measurement_cv);
}

} // namespace detail

/// Per-run aggregates as a sampling profiler would report them. Methods with
/// zero calls under a configuration produce no record (dead code is absent
/// from traces, not zero-valued).
inline std::vector<CoarseRecord> simulate_coarse(const GroundTruthSystem& sys,
                                                 const Configuration& cfg, int repetitions,
                                                 std::uint64_t seed) {
    std::vector<CoarseRecord> out;
    for (int rep = 0; rep < repetitions; ++rep) {
        for (std::size_t m = 0; m < sys.methods.size(); ++m) {
            const auto calls = detail::simulate_calls(sys, m, cfg, rep, seed);
            if (calls.empty()) continue;
            double sum = 0.0;
            for (double d : calls) sum += d;
            const double noise = detail::measurement_noise(sys, "noise", m, cfg, rep, seed);
            CoarseRecord r;
            r.config_id = cfg.id;
            r.repetition = rep;
            r.method = sys.methods[m].name;
            r.total_time_ns =
                static_cast<std::uint64_t>(std::llround(sum * overhead_factor(sys, cfg) * noise));
            r.call_count = calls.size();
            out.push_back(std::move(r));
        }
    }
    return out;
}

/// Per-call records for the given method indices, carrying the fine
/// instrumentation overhead factor on every call.
inline std::vector<FineCallRecord> simulate_fine(const GroundTruthSystem& sys,
                                                 const Configuration& cfg,
                                                 const std::vector<std::size_t>& methods,
                                                 int repetitions, std::uint64_t seed) {
    std::vector<FineCallRecord> out;
    for (int rep = 0; rep < repetitions; ++rep) {
        for (std::size_t m : methods) {
            const auto calls = detail::simulate_calls(sys, m, cfg, rep, seed);
            for (std::size_t i = 0; i < calls.size(); ++i) {
                FineCallRecord r;
                r.config_id = cfg.id;
                r.repetition = rep;
                r.method = sys.methods[m].name;
                r.call_index = i;
                r.duration_ns =
                    static_cast<std::uint64_t>(std::llround(calls[i] * sys.fine_factor));
                out.push_back(std::move(r));
            }
        }
    }
    return out;
}

/// Uninstrumented system wall time: the true per-method sum with measurement
/// noise only (within-run context noise averages out in the wall clock).
inline std::vector<BlackboxRecord> simulate_blackbox(const GroundTruthSystem& sys,
                                                     const Configuration& cfg, int repetitions,
                                                     std::uint64_t seed) {
    std::vector<BlackboxRecord> out;
    const double total = true_blackbox(sys, cfg);
    for (int rep = 0; rep < repetitions; ++rep) {
        const double noise = detail::measurement_noise(sys, "blackbox", 0, cfg, rep, seed);
        BlackboxRecord r;
        r.config_id = cfg.id;
        r.repetition = rep;
        r.total_time_ns = static_cast<std::uint64_t>(std::llround(total * noise));
        out.push_back(r);
    }
    return out;
}

/// Settings for gen_system. Counts of contaminated and nonlinear methods are
/// taken from the sensitive subset; the rest of the methods are constant.
struct GeneratorProfile {
    std::size_t methods = 60;
    std::size_t binary_options = 10;
    std::size_t numeric_options = 2;
    std::vector<double> numeric_domain = {1, 2, 4, 8};
    std::vector<std::string> constraints;
    double sensitive_fraction = 0.05;
    std::size_t contaminated = 3;
    std::size_t nonlinear = 0;
    double effect_size = 0.5;  // option coefficients relative to the intercept
    double measurement_cv = 0.02;
    double sigma = 0.1;
    double contamination_p = 0.01;
    double pareto_alpha = 1.1;
    double coarse_factor = 1.0;
    double fine_factor = 1.0;
    std::map<std::string, double> overhead_slopes;
};

namespace detail {

inline std::string method_name(std::size_t i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "app.C%zu::m%03zu", i / 10, i);
    return buf;
}

} // namespace detail

/// Deterministically generates a system matching the profile: a configured
/// fraction of methods reacts to options, a subset of those is contaminated
/// with heavy-tail calls, and another subset responds nonlinearly to a
/// numeric option (hard for a sparse design to resolve).
inline GroundTruthSystem gen_system(const GeneratorProfile& profile, std::uint64_t seed) {
    if (!(profile.contamination_p >= 0.0 && profile.contamination_p <= 0.05))
        throw UsageError("contamination probability must be in [0, 0.05]");
    std::vector<OptionDef> options;
    for (std::size_t i = 0; i < profile.binary_options; ++i)
        options.push_back({"b" + std::to_string(i), OptionKind::Binary, {}, 0.0});
    for (std::size_t i = 0; i < profile.numeric_options; ++i) {
        if (profile.numeric_domain.empty()) throw UsageError("numeric domain must be non-empty");
        options.push_back({"n" + std::to_string(i), OptionKind::Numeric, profile.numeric_domain,
                           profile.numeric_domain.front()});
    }
    GroundTruthSystem sys;
    sys.space = ConfigurationSpace(std::move(options), profile.constraints);
    sys.measurement_cv = profile.measurement_cv;
    sys.coarse_factor = profile.coarse_factor;
    sys.fine_factor = profile.fine_factor;
    for (const auto& [name, slope] : profile.overhead_slopes)
        sys.overhead_slopes[sys.space.option_index(name)] = slope;

    SplitMix64 rng(derive_seed(seed, "gen_system"));

    const auto n_sensitive =
        static_cast<std::size_t>(std::llround(profile.sensitive_fraction *
                                              static_cast<double>(profile.methods)));
    if (profile.contaminated + profile.nonlinear > n_sensitive)
        throw UsageError("contaminated + nonlinear must not exceed the sensitive count");
    std::vector<std::size_t> order(profile.methods);
    for (std::size_t i = 0; i < profile.methods; ++i) order[i] = i;
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
        std::swap(order[i], order[i + rng.next_below(order.size() - i)]);
    std::vector<bool> sensitive(profile.methods, false), contaminated(profile.methods, false),
        nonlinear(profile.methods, false);
    for (std::size_t i = 0; i < n_sensitive; ++i) sensitive[order[i]] = true;
    for (std::size_t i = 0; i < profile.contaminated; ++i) contaminated[order[i]] = true;
    for (std::size_t i = 0; i < profile.nonlinear; ++i)
        nonlinear[order[profile.contaminated + i]] = true;

    std::vector<std::size_t> binary_idx, numeric_idx;
    for (std::size_t i = 0; i < sys.space.size(); ++i)
        (sys.space.options()[i].kind == OptionKind::Binary ? binary_idx : numeric_idx).push_back(i);

    for (std::size_t i = 0; i < profile.methods; ++i) {
        MethodTruth m;
        m.name = detail::method_name(i);
        // Sensitive methods sit in the hot part of the system: pricier calls
        // and far more of them. That keeps the absolute and relative filter
        // floors meaningful at desk scale, and gives the per-call tail filter
        // enough volume per run to absorb heavy-tail stragglers.
        const bool hot = sensitive[i];
        const double intercept = (hot ? 400000.0 : 200000.0) +
                                 static_cast<double>(rng.next_below(hot ? 400001 : 300001));
        const double base_calls = hot ? 400.0 + static_cast<double>(rng.next_below(201))
                                      : 20.0 + static_cast<double>(rng.next_below(41));
        m.time_per_call.intercept = intercept;
        m.call_count.intercept = base_calls;
        if (sensitive[i] && !binary_idx.empty()) {
            const std::size_t n_terms = 1 + rng.next_below(2);
            std::vector<std::size_t> opts(binary_idx);
            for (std::size_t k = 0; k < n_terms && k < opts.size(); ++k) {
                std::swap(opts[k], opts[k + rng.next_below(opts.size() - k)]);
                const double c =
                    std::llround(profile.effect_size * intercept * (0.6 + 0.8 * rng.next_double()));
                m.time_per_call.linear.push_back({opts[k], c});
                m.call_count.linear.push_back(
                    {opts[k], static_cast<double>(std::llround(profile.effect_size * base_calls))});
            }
            if (opts.size() >= 2 && rng.next_bool()) {
                const double c = std::llround(profile.effect_size * intercept * 0.5);
                m.time_per_call.pairs.push_back(
                    {std::min(opts[0], opts[1]), std::max(opts[0], opts[1]), c});
            }
        }
        if (nonlinear[i] && !numeric_idx.empty()) {
            const std::size_t o = numeric_idx[rng.next_below(numeric_idx.size())];
            const double c = std::llround(profile.effect_size * intercept * 1.5);
            m.time_per_call.numeric.push_back({o, c, 2});
        }
        m.sigma = profile.sigma;
        if (contaminated[i]) {
            m.contamination_p = profile.contamination_p;
            m.pareto_alpha = profile.pareto_alpha;
        }
        sys.methods.push_back(std::move(m));
    }
    return sys;
}

// --- JSON (ground-truth files are oracle inputs for tests and reports) ---

namespace detail {

inline json influence_to_json(const InfluenceFunction& f, const ConfigurationSpace& space) {
    json doc;
    doc["intercept"] = f.intercept;
    json lin = json::array();
    for (const auto& t : f.linear) {
        json jt;
        jt["option"] = space.options()[t.option].name;
        jt["coeff"] = t.coeff;
        lin.push_back(std::move(jt));
    }
    doc["linear"] = std::move(lin);
    json prs = json::array();
    for (const auto& t : f.pairs) {
        json jt;
        jt["a"] = space.options()[t.a].name;
        jt["b"] = space.options()[t.b].name;
        jt["coeff"] = t.coeff;
        prs.push_back(std::move(jt));
    }
    doc["pairs"] = std::move(prs);
    json num = json::array();
    for (const auto& t : f.numeric) {
        json jt;
        jt["option"] = space.options()[t.option].name;
        jt["coeff"] = t.coeff;
        jt["exponent"] = t.exponent;
        num.push_back(std::move(jt));
    }
    doc["numeric"] = std::move(num);
    return doc;
}

inline InfluenceFunction influence_from_json(const json& doc, const ConfigurationSpace& space) {
    InfluenceFunction f;
    f.intercept = doc.value("intercept", 0.0);
    if (doc.contains("linear"))
        for (const auto& jt : doc["linear"])
            f.linear.push_back(
                {space.option_index(jt.at("option").get<std::string>()), jt.at("coeff").get<double>()});
    if (doc.contains("pairs"))
        for (const auto& jt : doc["pairs"])
            f.pairs.push_back({space.option_index(jt.at("a").get<std::string>()),
                               space.option_index(jt.at("b").get<std::string>()),
                               jt.at("coeff").get<double>()});
    if (doc.contains("numeric"))
        for (const auto& jt : doc["numeric"])
            f.numeric.push_back({space.option_index(jt.at("option").get<std::string>()),
                                 jt.at("coeff").get<double>(), jt.value("exponent", 1)});
    return f;
}

} // namespace detail

inline json system_to_json(const GroundTruthSystem& sys) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["space"] = space_to_json(sys.space);
    doc["measurement_cv"] = sys.measurement_cv;
    doc["coarse_factor"] = sys.coarse_factor;
    doc["fine_factor"] = sys.fine_factor;
    json slopes = json::object();
    for (const auto& [opt, slope] : sys.overhead_slopes)
        slopes[sys.space.options()[opt].name] = slope;
    doc["overhead_slopes"] = std::move(slopes);
    json methods = json::array();
    for (const auto& m : sys.methods) {
        json jm;
        jm["name"] = m.name;
        jm["time_per_call"] = detail::influence_to_json(m.time_per_call, sys.space);
        jm["call_count"] = detail::influence_to_json(m.call_count, sys.space);
        jm["sigma"] = m.sigma;
        jm["contamination_p"] = m.contamination_p;
        jm["pareto_alpha"] = m.pareto_alpha;
        methods.push_back(std::move(jm));
    }
    doc["methods"] = std::move(methods);
    return doc;
}

inline GroundTruthSystem system_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("space") || !doc.contains("methods"))
        throw FormatError("system file needs 'space' and 'methods'");
    GroundTruthSystem sys;
    sys.space = space_from_json(doc["space"]);
    sys.measurement_cv = doc.value("measurement_cv", 0.0);
    sys.coarse_factor = doc.value("coarse_factor", 1.0);
    sys.fine_factor = doc.value("fine_factor", 1.0);
    if (doc.contains("overhead_slopes"))
        for (auto it = doc["overhead_slopes"].begin(); it != doc["overhead_slopes"].end(); ++it)
            sys.overhead_slopes[sys.space.option_index(it.key())] = it.value().get<double>();
    for (const auto& jm : doc["methods"]) {
        MethodTruth m;
        m.name = jm.at("name").get<std::string>();
        m.time_per_call = detail::influence_from_json(jm.at("time_per_call"), sys.space);
        m.call_count = detail::influence_from_json(jm.at("call_count"), sys.space);
        m.sigma = jm.value("sigma", 0.0);
        m.contamination_p = jm.value("contamination_p", 0.0);
        m.pareto_alpha = jm.value("pareto_alpha", 1.1);
        sys.methods.push_back(std::move(m));
    }
    return sys;
}

inline GeneratorProfile profile_from_json(const json& doc) {
    GeneratorProfile p;
    p.methods = doc.value("methods", p.methods);
    p.binary_options = doc.value("binary_options", p.binary_options);
    p.numeric_options = doc.value("numeric_options", p.numeric_options);
    if (doc.contains("numeric_domain"))
        p.numeric_domain = doc["numeric_domain"].get<std::vector<double>>();
    if (doc.contains("constraints"))
        p.constraints = doc["constraints"].get<std::vector<std::string>>();
    p.sensitive_fraction = doc.value("sensitive_fraction", p.sensitive_fraction);
    p.contaminated = doc.value("contaminated", p.contaminated);
    p.nonlinear = doc.value("nonlinear", p.nonlinear);
    p.effect_size = doc.value("effect_size", p.effect_size);
    p.measurement_cv = doc.value("measurement_cv", p.measurement_cv);
    p.sigma = doc.value("sigma", p.sigma);
    p.contamination_p = doc.value("contamination_p", p.contamination_p);
    p.pareto_alpha = doc.value("pareto_alpha", p.pareto_alpha);
    p.coarse_factor = doc.value("coarse_factor", p.coarse_factor);
    p.fine_factor = doc.value("fine_factor", p.fine_factor);
    if (doc.contains("overhead_slopes"))
        for (auto it = doc["overhead_slopes"].begin(); it != doc["overhead_slopes"].end(); ++it)
            p.overhead_slopes[it.key()] = it.value().get<double>();
    return p;
}

} // namespace perfluence
