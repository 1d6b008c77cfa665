#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "perfluence/analysis.hpp"
#include "perfluence/parallel.hpp"
#include "perfluence/perfmodel.hpp"
#include "perfluence/sampling.hpp"

namespace perfluence {

/// Thresholds of the method filter: error floor alpha (percent), absolute
/// time floor beta, relative share floor gamma.
struct FilterParams {
    double alpha = 5.0;
    double beta_ns = 1e7;  // 10 ms
    double gamma = 0.01;
};

/// Per-configuration system time reconstructed as the sum of all per-method
/// times (exact over the dataset rows).
inline std::map<std::uint64_t, double> black_box_perf(
    const std::map<std::string, MethodDataset>& datasets) {
    std::map<std::uint64_t, double> bb;
    for (const auto& [method, ds] : datasets)
        for (const auto& r : ds.rows) bb[r.config_id] += r.time_ns;
    return bb;
}

/// Mean per-configuration time of a method over the sample set.
inline double abs_perf(const MethodDataset& ds) {
    if (ds.rows.empty()) throw DataError("abs_perf of an empty dataset");
    double sum = 0.0;
    for (const auto& r : ds.rows) sum += r.time_ns;
    return sum / static_cast<double>(ds.rows.size());
}

/// Mean share of the per-configuration system time; configurations with a
/// zero system time are skipped.
inline double rel_perf(const MethodDataset& ds, const std::map<std::uint64_t, double>& blackbox) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : ds.rows) {
        auto it = blackbox.find(r.config_id);
        if (it == blackbox.end() || it->second <= 0.0) continue;
        sum += r.time_ns / it->second;
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

/// The filter predicate: inaccurately learned and performance-relevant,
/// either by absolute time or by relative share.
inline bool phi(const std::optional<double>& mape_value, double abs_perf_ns, double rel_share,
                const FilterParams& p) {
    if (!mape_value || *mape_value < p.alpha) return false;
    return abs_perf_ns >= p.beta_ns || rel_share >= p.gamma;
}

struct HardMethod {
    std::string method;
    double mape = 0.0;
    bool mape_exceeded = false;
    bool abs_exceeded = false;
    bool rel_exceeded = false;
};

/// Methods selected for fine-grained re-measurement, sorted by test error
/// descending.
struct HardSet {
    std::vector<HardMethod> selected;

    bool contains(const std::string& method) const {
        for (const auto& h : selected)
            if (h.method == method) return true;
        return false;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& h : selected) out.push_back(h.method);
        return out;
    }
};

inline HardSet select_hard(const std::vector<PerfModel>& models, const FilterParams& params) {
    HardSet out;
    for (const auto& m : models) {
        if (!phi(m.test_mape.value, m.abs_perf, m.rel_perf, params)) continue;
        HardMethod h;
        h.method = m.method;
        h.mape = *m.test_mape.value;
        h.mape_exceeded = true;
        h.abs_exceeded = m.abs_perf >= params.beta_ns;
        h.rel_exceeded = m.rel_perf >= params.gamma;
        out.selected.push_back(std::move(h));
    }
    std::sort(out.selected.begin(), out.selected.end(), [](const HardMethod& a, const HardMethod& b) {
        if (a.mape != b.mape) return a.mape > b.mape;
        return a.method < b.method;
    });
    return out;
}

struct AccuracySummary {
    std::size_t methods = 0;
    std::size_t evaluated = 0;  // methods with a defined test error
    std::size_t under_alpha = 0;
    double fraction_under_alpha = 0.0;
};

inline AccuracySummary summarize_accuracy(const std::vector<PerfModel>& models, double alpha) {
    AccuracySummary s;
    s.methods = models.size();
    for (const auto& m : models) {
        if (!m.test_mape.value) continue;
        ++s.evaluated;
        if (*m.test_mape.value < alpha) ++s.under_alpha;
    }
    if (s.evaluated > 0)
        s.fraction_under_alpha =
            static_cast<double>(s.under_alpha) / static_cast<double>(s.evaluated);
    return s;
}

namespace detail {

inline void require_coverage(const std::vector<Configuration>& configs,
                             const std::set<std::uint64_t>& covered, const char* what) {
    std::vector<std::string> missing;
    for (const auto& c : configs)
        if (!covered.count(c.id)) missing.push_back(to_hex16(c.id));
    if (missing.empty()) return;
    std::string msg = std::string(what) + " traces are missing " +
                      std::to_string(missing.size()) + " configuration(s):";
    for (std::size_t i = 0; i < missing.size() && i < 8; ++i) msg += " " + missing[i];
    if (missing.size() > 8) msg += " ...";
    throw DataError(msg);
}

inline std::vector<PerfModel> fit_models(const std::map<std::string, MethodDataset>& learn,
                                         const std::map<std::string, MethodDataset>& test,
                                         const std::map<std::uint64_t, double>& blackbox,
                                         const TreeHyperparams& hp, unsigned jobs) {
    std::vector<const MethodDataset*> order;
    for (const auto& [method, ds] : learn) order.push_back(&ds);
    std::vector<PerfModel> models(order.size());
    parallel_for(order.size(), jobs, [&](std::size_t i) {
        const MethodDataset& ds = *order[i];
        PerfModel m;
        m.method = ds.method;
        m.tree = fit_cart(ds, hp);
        m.train_mape = mape([&](const FeatureVector& x) { return m.tree.predict(x); }, ds);
        auto it = test.find(ds.method);
        if (it != test.end())
            m.test_mape = mape([&](const FeatureVector& x) { return m.tree.predict(x); }, it->second);
        m.abs_perf = abs_perf(ds);
        m.rel_perf = rel_perf(ds, blackbox);
        models[i] = std::move(m);
    });
    return models;
}

} // namespace detail

struct Phase1Result {
    std::map<std::string, MethodDataset> learn_datasets;
    std::map<std::string, MethodDataset> test_datasets;
    std::map<std::uint64_t, double> learn_blackbox;
    std::map<std::uint64_t, double> test_blackbox;
    std::vector<PerfModel> models;  // sorted by method id
    AccuracySummary accuracy;
};

/// Coarse step: aggregate repetitions, fit one tree per method, evaluate on
/// the random test set.
inline Phase1Result run_phase1(const ConfigurationSpace& space, const SampleSet& learn_set,
                               const SampleSet& test_set,
                               const std::vector<CoarseRecord>& learn_records,
                               const std::vector<CoarseRecord>& test_records,
                               const TreeHyperparams& hp, double alpha = 5.0, unsigned jobs = 1) {
    detail::require_coverage(learn_set.configurations, covered_configs(learn_records), "coarse");
    detail::require_coverage(test_set.configurations, covered_configs(test_records), "coarse test");
    Phase1Result out;
    out.learn_datasets = aggregate_repetitions(space, learn_set.configurations, learn_records);
    out.test_datasets = aggregate_repetitions(space, test_set.configurations, test_records);
    out.learn_blackbox = black_box_perf(out.learn_datasets);
    out.test_blackbox = black_box_perf(out.test_datasets);
    out.models = detail::fit_models(out.learn_datasets, out.test_datasets, out.learn_blackbox, hp,
                                    jobs);
    out.accuracy = summarize_accuracy(out.models, alpha);
    return out;
}

struct Phase2Result {
    std::map<std::string, MethodDataset> learn_datasets;
    std::map<std::string, MethodDataset> test_datasets;
    std::vector<PerfModel> models;  // refined models for the hard methods
    AccuracySummary accuracy;
    std::vector<std::string> errors;  // hard methods absent from the fine traces
    std::vector<FineGroupStats> group_stats;
};

/// Fine step: outlier-filter the per-call traces, aggregate, and refit the
/// hard methods. Hard methods without fine data are reported and skipped.
inline Phase2Result run_phase2(const ConfigurationSpace& space, const HardSet& hard,
                               const SampleSet& learn_set, const SampleSet& test_set,
                               const std::vector<FineCallRecord>& fine_records,
                               const std::vector<FineCallRecord>& fine_test_records,
                               const TreeHyperparams& hp, double alpha = 5.0,
                               double tail_fraction = 0.01, unsigned jobs = 1) {
    Phase2Result out;
    const auto filtered = filter_outliers(fine_records, tail_fraction);
    const auto filtered_test = filter_outliers(fine_test_records, tail_fraction);
    auto learn_summary = summarize_fine(space, learn_set.configurations, filtered);
    auto test_summary = summarize_fine(space, test_set.configurations, filtered_test);
    out.group_stats = std::move(learn_summary.groups);

    std::map<std::string, MethodDataset> learn, test;
    for (const auto& h : hard.selected) {
        auto it = learn_summary.datasets.find(h.method);
        if (it == learn_summary.datasets.end()) {
            out.errors.push_back("method '" + h.method + "' is absent from the fine traces");
            continue;
        }
        learn.emplace(h.method, it->second);
        auto tt = test_summary.datasets.find(h.method);
        if (tt != test_summary.datasets.end()) test.emplace(h.method, tt->second);
    }
    out.learn_datasets = learn;
    out.test_datasets = test;
    const auto blackbox = black_box_perf(learn_summary.datasets);
    out.models = detail::fit_models(learn, test, blackbox, hp, jobs);
    out.accuracy = summarize_accuracy(out.models, alpha);
    return out;
}

struct PipelineReport {
    FilterParams params;
    TreeHyperparams hyperparams;
    Phase1Result phase1;
    HardSet hard;
    std::optional<Phase2Result> phase2;
    std::vector<std::string> degraded;  // hard methods whose refit tested worse
};

/// The whole two-step procedure: coarse learning, filtering, fine refit.
/// Phase-2 models replace phase-1 models for the hard methods; a refit that
/// tests worse is kept (the procedure is followed) but flagged.
inline PipelineReport run_pipeline(const ConfigurationSpace& space, const SampleSet& learn_set,
                                   const SampleSet& test_set,
                                   const std::vector<CoarseRecord>& coarse,
                                   const std::vector<CoarseRecord>& coarse_test,
                                   const std::vector<FineCallRecord>& fine,
                                   const std::vector<FineCallRecord>& fine_test,
                                   const FilterParams& params, const TreeHyperparams& hp,
                                   double tail_fraction = 0.01, unsigned jobs = 1) {
    PipelineReport report;
    report.params = params;
    report.hyperparams = hp;
    report.phase1 =
        run_phase1(space, learn_set, test_set, coarse, coarse_test, hp, params.alpha, jobs);
    report.hard = select_hard(report.phase1.models, params);
    if (!report.hard.selected.empty() && !fine.empty()) {
        report.phase2 = run_phase2(space, report.hard, learn_set, test_set, fine, fine_test, hp,
                                   params.alpha, tail_fraction, jobs);
        for (const auto& refined : report.phase2->models) {
            for (const auto& m : report.phase1.models) {
                if (m.method != refined.method) continue;
                if (m.test_mape.value && refined.test_mape.value &&
                    *refined.test_mape.value > *m.test_mape.value)
                    report.degraded.push_back(refined.method);
            }
        }
    }
    return report;
}

/// Final per-method models: phase-2 where available, phase-1 otherwise.
inline std::vector<PerfModel> final_models(const PipelineReport& report) {
    std::map<std::string, const PerfModel*> chosen;
    for (const auto& m : report.phase1.models) chosen[m.method] = &m;
    if (report.phase2)
        for (const auto& m : report.phase2->models) chosen[m.method] = &m;
    std::vector<PerfModel> out;
    for (const auto& [name, m] : chosen) out.push_back(*m);
    return out;
}

struct InfluenceMethodEffect {
    std::string method;
    double score = 0.0;   // the method's importance for the term
    double effect = 0.0;  // score scaled by the method's mean time, ns
};

struct InfluenceTerm {
    std::string term;
    double system_score = 0.0;
    std::vector<InfluenceMethodEffect> methods;
};

struct InfluenceTrace {
    std::vector<InfluenceTerm> terms;
    std::vector<std::string> relevant_methods;  // smallest set covering the target share
    double coverage_target = 0.8;
    double covered_share = 0.0;
};

/// Attributes the top system-level terms to the methods that realize them:
/// take the smallest absPerf-descending prefix of methods covering the
/// target share of mean system time, then list those whose term importance,
/// scaled by their mean time, exceeds the per-method error bound
/// (error_fraction of the method's mean time).
inline InfluenceTrace trace_influence(const ImportanceTable& system_importance,
                                      const std::map<std::string, ImportanceTable>& method_importance,
                                      const std::map<std::string, double>& method_abs_perf,
                                      std::size_t top_k = 2, double coverage = 0.8,
                                      double error_fraction = 0.04) {
    InfluenceTrace trace;
    trace.coverage_target = coverage;

    double total = 0.0;
    std::vector<std::pair<std::string, double>> by_abs(method_abs_perf.begin(),
                                                       method_abs_perf.end());
    for (const auto& [name, a] : by_abs) total += a;
    std::sort(by_abs.begin(), by_abs.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    double covered = 0.0;
    for (const auto& [name, a] : by_abs) {
        if (total > 0.0 && covered >= coverage * total) break;
        trace.relevant_methods.push_back(name);
        covered += a;
    }
    trace.covered_share = total > 0.0 ? covered / total : 0.0;

    for (const auto& entry : system_importance.top(top_k)) {
        InfluenceTerm term;
        term.term = entry.term;
        term.system_score = entry.score;
        for (const auto& name : trace.relevant_methods) {
            auto mi = method_importance.find(name);
            if (mi == method_importance.end()) continue;
            const double score = mi->second.score_of(entry.term);
            const double a = method_abs_perf.at(name);
            const double effect = score * a;
            if (effect > error_fraction * a && effect > 0.0)
                term.methods.push_back({name, score, effect});
        }
        std::sort(term.methods.begin(), term.methods.end(),
                  [](const InfluenceMethodEffect& a, const InfluenceMethodEffect& b) {
                      if (a.effect != b.effect) return a.effect > b.effect;
                      return a.method < b.method;
                  });
        trace.terms.push_back(std::move(term));
    }
    return trace;
}

struct OverheadReport {
    CorrelationReport global;
    std::vector<std::pair<double, CorrelationReport>> per_level;  // grouping option value -> report
    std::vector<double> skipped_levels;  // fewer than 3 configurations
};

/// Correlates unprofiled and profiled per-configuration times globally and,
/// when a grouping option is given, per value of that option. A profiler
/// whose overhead depends on the option shows up as high per-level but
/// degraded global correlation.
inline OverheadReport overhead_study(const std::map<std::uint64_t, double>& unprofiled,
                                     const std::map<std::uint64_t, double>& profiled,
                                     const ConfigurationSpace& space,
                                     const std::vector<Configuration>& configs,
                                     const std::optional<std::string>& group_by = std::nullopt) {
    OverheadReport out;
    out.global = correlate(unprofiled, profiled);
    if (!group_by) return out;
    const std::size_t opt = space.option_index(*group_by);
    std::map<double, std::pair<std::map<std::uint64_t, double>, std::map<std::uint64_t, double>>>
        levels;
    for (const auto& c : configs) {
        auto u = unprofiled.find(c.id);
        auto p = profiled.find(c.id);
        if (u == unprofiled.end() || p == profiled.end()) continue;
        auto& slot = levels[c.values[opt]];
        slot.first[c.id] = u->second;
        slot.second[c.id] = p->second;
    }
    for (const auto& [value, series] : levels) {
        if (series.first.size() < 3) {
            out.skipped_levels.push_back(value);
            continue;
        }
        out.per_level.emplace_back(value, correlate(series.first, series.second));
    }
    return out;
}

// --- report serialization ---

inline json filter_params_to_json(const FilterParams& p) {
    json doc;
    doc["alpha"] = p.alpha;
    doc["beta_ns"] = p.beta_ns;
    doc["gamma"] = p.gamma;
    return doc;
}

inline json hyperparams_to_json(const TreeHyperparams& hp) {
    json doc;
    doc["min_samples_leaf"] = hp.min_samples_leaf;
    doc["max_depth"] = hp.max_depth;
    doc["min_impurity_decrease"] = hp.min_impurity_decrease;
    return doc;
}

inline json accuracy_to_json(const AccuracySummary& s) {
    json doc;
    doc["methods"] = s.methods;
    doc["evaluated"] = s.evaluated;
    doc["under_alpha"] = s.under_alpha;
    doc["fraction_under_alpha"] = s.fraction_under_alpha;
    return doc;
}

inline json hard_set_to_json(const HardSet& h) {
    json arr = json::array();
    for (const auto& m : h.selected) {
        json jm;
        jm["method"] = m.method;
        jm["mape"] = m.mape;
        jm["mape_exceeded"] = m.mape_exceeded;
        jm["abs_exceeded"] = m.abs_exceeded;
        jm["rel_exceeded"] = m.rel_exceeded;
        arr.push_back(std::move(jm));
    }
    return arr;
}

inline json influence_trace_to_json(const InfluenceTrace& t) {
    json doc;
    doc["coverage_target"] = t.coverage_target;
    doc["covered_share"] = t.covered_share;
    doc["relevant_methods"] = t.relevant_methods;
    json terms = json::array();
    for (const auto& term : t.terms) {
        json jt;
        jt["term"] = term.term;
        jt["system_score"] = term.system_score;
        json methods = json::array();
        for (const auto& m : term.methods) {
            json jm;
            jm["method"] = m.method;
            jm["score"] = m.score;
            jm["effect_ns"] = m.effect;
            methods.push_back(std::move(jm));
        }
        jt["methods"] = std::move(methods);
        terms.push_back(std::move(jt));
    }
    doc["terms"] = std::move(terms);
    return doc;
}

inline json overhead_report_to_json(const OverheadReport& r) {
    json doc;
    doc["global"] = correlation_to_json(r.global);
    json levels = json::array();
    for (const auto& [value, rep] : r.per_level) {
        json jl;
        jl["level"] = value;
        jl["correlation"] = correlation_to_json(rep);
        levels.push_back(std::move(jl));
    }
    doc["per_level"] = std::move(levels);
    doc["skipped_levels"] = r.skipped_levels;
    return doc;
}

inline json pipeline_report_to_json(const PipelineReport& report) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["filter"] = filter_params_to_json(report.params);
    doc["hyperparams"] = hyperparams_to_json(report.hyperparams);
    json p1;
    p1["accuracy"] = accuracy_to_json(report.phase1.accuracy);
    p1["models"] = models_to_json(report.phase1.models)["methods"];
    doc["phase1"] = std::move(p1);
    doc["hard_set"] = hard_set_to_json(report.hard);
    if (report.phase2) {
        json p2;
        p2["accuracy"] = accuracy_to_json(report.phase2->accuracy);
        p2["models"] = models_to_json(report.phase2->models)["methods"];
        p2["errors"] = report.phase2->errors;
        doc["phase2"] = std::move(p2);
    }
    doc["degraded"] = report.degraded;
    return doc;
}

} // namespace perfluence
