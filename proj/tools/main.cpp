// Command-line frontend: file-to-file transforms over the library, one
// subcommand per pipeline stage. All randomized subcommands take an explicit
// --seed; identical inputs and seeds produce byte-identical outputs.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "perfluence/perfluence.hpp"

namespace pf = perfluence;

namespace {

pf::json load_json(const std::string& path) {
    try {
        return pf::json::parse(pf::read_file(path));
    } catch (const pf::json::parse_error& e) {
        throw pf::FormatError(path + ": " + e.what());
    }
}

pf::ConfigurationSpace load_space(const std::string& path) {
    try {
        return pf::space_from_json(load_json(path));
    } catch (const pf::FormatError& e) {
        throw pf::FormatError(path + ": " + e.what());
    }
}

pf::SampleSet load_sample_set(const pf::ConfigurationSpace& space, const std::string& path) {
    try {
        return pf::sample_set_from_json(space, load_json(path));
    } catch (const pf::FormatError& e) {
        throw pf::FormatError(path + ": " + e.what());
    }
}

std::string format_ms(double ns) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", ns / 1e6);
    return buf;
}

std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char c : name)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
    return out;
}

unsigned default_jobs() {
    if (const char* env = std::getenv("PERFLUENCE_JOBS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return 1;
}

struct SampleArgs {
    std::string space_path, strategy, design, exclude_path, out_path;
    std::uint64_t k = 100;
    std::optional<std::uint64_t> seed;
    std::size_t max_samples = 0;
};

pf::DesignSpec parse_design(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos)
        throw pf::UsageError("design must look like '9x3' (runs x levels)");
    pf::DesignSpec d;
    try {
        d.runs = std::stoi(text.substr(0, x));
        d.levels = std::stoi(text.substr(x + 1));
    } catch (const std::exception&) {
        throw pf::UsageError("design must look like '9x3' (runs x levels)");
    }
    return d;
}

void run_sample(const SampleArgs& a) {
    const auto space = load_space(a.space_path);
    pf::RunManifest manifest;
    manifest.subcommand = "sample";
    manifest.add_input(a.space_path);
    manifest.parameters["space"] = a.space_path;
    manifest.parameters["strategy"] = a.strategy;

    pf::SampleSet set;
    if (a.strategy == "fw" || a.strategy == "pw") {
        set = a.strategy == "fw" ? pf::sample_feature_wise(space) : pf::sample_pair_wise(space);
        if (!a.design.empty()) {
            std::vector<pf::OptionDef> numeric;
            for (const auto& o : space.options())
                if (o.kind == pf::OptionKind::Numeric) numeric.push_back(o);
            const auto spec = parse_design(a.design);
            const auto design = pf::plackett_burman(numeric, spec);
            const auto strategy = set.strategy;
            set = pf::compose_samples(set, design, space);
            if (design.option_names.empty()) set.strategy = strategy;
            manifest.parameters["design"] = a.design;
        }
    } else if (a.strategy == "random") {
        if (!a.seed) throw pf::UsageError("random sampling requires --seed");
        std::optional<pf::SampleSet> exclude;
        if (!a.exclude_path.empty()) {
            exclude = load_sample_set(space, a.exclude_path);
            manifest.add_input(a.exclude_path);
            manifest.parameters["exclude"] = a.exclude_path;
        }
        set = pf::sample_random(space, a.k, *a.seed, exclude ? &*exclude : nullptr);
        manifest.parameters["k"] = a.k;
        manifest.seed = a.seed;
    } else {
        throw pf::UsageError("unknown strategy '" + a.strategy + "' (use fw, pw, or random)");
    }
    if (a.max_samples > 0 && set.configurations.size() > a.max_samples) {
        set.configurations.resize(a.max_samples);
        manifest.parameters["max_samples"] = a.max_samples;
    }
    manifest.parameters["out"] = a.out_path;
    pf::write_json_output(a.out_path, pf::sample_set_to_json(space, set), manifest);
    std::cerr << "wrote " << set.configurations.size() << " configurations to " << a.out_path
              << "\n";
}

struct SimulateArgs {
    std::string profile_path, system_path, configs_path, methods_path;
    std::string out_system, out_space, coarse_path, fine_path, blackbox_path;
    int repetitions = 5;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

std::vector<std::size_t> resolve_methods(const pf::GroundTruthSystem& sys,
                                         const std::string& methods_path) {
    std::vector<std::size_t> out;
    if (methods_path.empty() || methods_path == "all") {
        for (std::size_t i = 0; i < sys.methods.size(); ++i) out.push_back(i);
        return out;
    }
    const std::string text = pf::read_file(methods_path);
    pf::detail::LineCursor cur(text);
    std::string_view line;
    while (cur.next(line)) {
        if (line.empty()) continue;
        const std::string name(line);
        bool found = false;
        for (std::size_t i = 0; i < sys.methods.size(); ++i)
            if (sys.methods[i].name == name) {
                out.push_back(i);
                found = true;
                break;
            }
        if (!found) throw pf::DataError(methods_path + ": unknown method '" + name + "'");
    }
    return out;
}

void run_simulate(const SimulateArgs& a, unsigned jobs) {
    if (!a.seed_set) throw pf::UsageError("simulate requires --seed");
    if (a.profile_path.empty() == a.system_path.empty())
        throw pf::UsageError("give exactly one of --profile or --system");

    pf::RunManifest manifest;
    manifest.subcommand = "simulate";
    manifest.seed = a.seed;
    manifest.parameters["repetitions"] = a.repetitions;

    pf::GroundTruthSystem sys;
    if (!a.profile_path.empty()) {
        manifest.add_input(a.profile_path);
        manifest.parameters["profile"] = a.profile_path;
        sys = pf::gen_system(pf::profile_from_json(load_json(a.profile_path)), a.seed);
    } else {
        manifest.add_input(a.system_path);
        manifest.parameters["system"] = a.system_path;
        sys = pf::system_from_json(load_json(a.system_path));
    }
    if (!a.out_system.empty()) {
        manifest.parameters["out_system"] = a.out_system;
        pf::write_json_output(a.out_system, pf::system_to_json(sys), manifest);
    }
    if (!a.out_space.empty()) {
        manifest.parameters["out_space"] = a.out_space;
        pf::write_json_output(a.out_space, pf::space_to_json(sys.space), manifest);
    }

    if (a.configs_path.empty()) {
        if (!a.coarse_path.empty() || !a.fine_path.empty() || !a.blackbox_path.empty())
            throw pf::UsageError("trace simulation requires --configs");
        if (a.out_system.empty() && a.out_space.empty())
            throw pf::UsageError("nothing to do: give --out-system/--out-space or trace outputs");
        return;
    }
    manifest.add_input(a.configs_path);
    manifest.parameters["configs"] = a.configs_path;
    const auto set = load_sample_set(sys.space, a.configs_path);
    const auto& configs = set.configurations;

    if (!a.coarse_path.empty()) {
        std::vector<std::vector<pf::CoarseRecord>> parts(configs.size());
        pf::parallel_for(configs.size(), jobs, [&](std::size_t i) {
            parts[i] = pf::simulate_coarse(sys, configs[i], a.repetitions, a.seed);
        });
        std::vector<pf::CoarseRecord> all;
        for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
        pf::write_coarse(a.coarse_path, all);
        pf::write_sibling_manifest(a.coarse_path, manifest);
        std::cerr << "wrote " << all.size() << " coarse records to " << a.coarse_path << "\n";
    }
    if (!a.fine_path.empty()) {
        const auto methods = resolve_methods(sys, a.methods_path);
        std::vector<std::vector<pf::FineCallRecord>> parts(configs.size());
        pf::parallel_for(configs.size(), jobs, [&](std::size_t i) {
            parts[i] = pf::simulate_fine(sys, configs[i], methods, a.repetitions, a.seed);
        });
        std::vector<pf::FineCallRecord> all;
        for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
        pf::write_fine(a.fine_path, all);
        pf::write_sibling_manifest(a.fine_path, manifest);
        std::cerr << "wrote " << all.size() << " fine records to " << a.fine_path << "\n";
    }
    if (!a.blackbox_path.empty()) {
        std::vector<pf::BlackboxRecord> all;
        for (const auto& c : configs) {
            const auto recs = pf::simulate_blackbox(sys, c, a.repetitions, a.seed);
            all.insert(all.end(), recs.begin(), recs.end());
        }
        pf::write_blackbox(a.blackbox_path, all);
        pf::write_sibling_manifest(a.blackbox_path, manifest);
        std::cerr << "wrote " << all.size() << " blackbox records to " << a.blackbox_path << "\n";
    }
}

struct VarianceArgs {
    std::string space_path, configs_path, coarse_path, fine_path, out_path, csv_path, hist_dir;
    double bound = 0.04;
};

void run_variance(const VarianceArgs& a) {
    const auto space = load_space(a.space_path);
    const auto set = load_sample_set(space, a.configs_path);
    const auto records = pf::read_coarse(a.coarse_path);

    pf::RunManifest manifest;
    manifest.subcommand = "variance";
    manifest.add_input(a.space_path);
    manifest.add_input(a.configs_path);
    manifest.add_input(a.coarse_path);
    manifest.parameters["space"] = a.space_path;
    manifest.parameters["configs"] = a.configs_path;
    manifest.parameters["coarse"] = a.coarse_path;
    manifest.parameters["bound"] = a.bound;

    std::optional<pf::FineSummary> fine;
    if (!a.fine_path.empty()) {
        manifest.add_input(a.fine_path);
        manifest.parameters["fine"] = a.fine_path;
        fine = pf::summarize_fine(space, set.configurations, pf::read_fine(a.fine_path));
    }
    const auto report = pf::build_variance_report(space, set.configurations, records,
                                                  fine ? &fine->groups : nullptr, a.bound);
    pf::write_json_output(a.out_path, pf::variance_report_to_json(report), manifest);

    if (!a.csv_path.empty()) {
        auto sorted = report.methods;
        std::sort(sorted.begin(), sorted.end(),
                  [](const pf::MethodVariance& x, const pf::MethodVariance& y) {
                      if (x.cv_configuration != y.cv_configuration)
                          return x.cv_configuration > y.cv_configuration;
                      return x.method < y.method;
                  });
        std::string csv = "method,cv_configuration,cv_measurement,sensitive\n";
        char buf[64];
        for (const auto& m : sorted) {
            std::snprintf(buf, sizeof buf, "%.6f,%.6f", m.cv_configuration, m.cv_measurement);
            csv += m.method + "," + buf + "," + (m.sensitive ? "1" : "0") + "\n";
        }
        pf::write_file(a.csv_path, csv);
        pf::write_sibling_manifest(a.csv_path, manifest);
    }
    if (!a.hist_dir.empty()) {
        std::filesystem::create_directories(a.hist_dir);
        for (const auto& m : report.methods) {
            if (!m.context_histogram) continue;
            std::string csv = "bin_lower_ns,count\n";
            char buf[64];
            for (std::size_t b = 0; b < pf::LogHistogram::kBins; ++b) {
                std::snprintf(buf, sizeof buf, "%.1f,%llu", pf::LogHistogram::bin_lower(b),
                              static_cast<unsigned long long>(m.context_histogram->counts[b]));
                csv += std::string(buf) + "\n";
            }
            pf::write_file(a.hist_dir + "/" + sanitize_filename(m.method) + ".csv", csv);
        }
    }
    std::cerr << "variance report for " << report.methods.size() << " methods in " << a.out_path
              << "\n";
}

struct LearnArgs {
    std::string space_path, configs_path, coarse_path, test_configs_path, test_coarse_path;
    std::string out_path, mape_csv;
    std::size_t leaf = 2, depth = 0, forest = 0;
    std::optional<std::uint64_t> seed;
    double alpha = 5.0;
};

void run_learn(const LearnArgs& a, unsigned jobs) {
    const auto space = load_space(a.space_path);
    const auto learn_set = load_sample_set(space, a.configs_path);
    const auto records = pf::read_coarse(a.coarse_path);

    pf::RunManifest manifest;
    manifest.subcommand = "learn";
    manifest.add_input(a.space_path);
    manifest.add_input(a.configs_path);
    manifest.add_input(a.coarse_path);
    manifest.parameters["space"] = a.space_path;
    manifest.parameters["configs"] = a.configs_path;
    manifest.parameters["coarse"] = a.coarse_path;
    manifest.parameters["min_samples_leaf"] = a.leaf;
    manifest.parameters["max_depth"] = a.depth;
    manifest.parameters["alpha"] = a.alpha;

    pf::SampleSet test_set;
    std::vector<pf::CoarseRecord> test_records;
    if (!a.test_configs_path.empty()) {
        test_set = load_sample_set(space, a.test_configs_path);
        manifest.add_input(a.test_configs_path);
        manifest.parameters["test_configs"] = a.test_configs_path;
        if (!a.test_coarse_path.empty()) {
            test_records = pf::read_coarse(a.test_coarse_path);
            manifest.add_input(a.test_coarse_path);
            manifest.parameters["test_coarse"] = a.test_coarse_path;
        } else {
            test_records = records;
        }
    }

    pf::TreeHyperparams hp;
    hp.min_samples_leaf = a.leaf;
    hp.max_depth = a.depth;
    auto phase1 = pf::run_phase1(space, learn_set, test_set, records, test_records, hp, a.alpha,
                                 jobs);
    if (a.forest > 0) {
        if (!a.seed) throw pf::UsageError("--forest requires --seed");
        manifest.parameters["forest"] = a.forest;
        manifest.seed = a.seed;
        std::vector<std::string> names;
        for (const auto& o : space.options()) names.push_back(o.name);
        pf::parallel_for(phase1.models.size(), jobs, [&](std::size_t i) {
            auto& m = phase1.models[i];
            const auto& ds = phase1.learn_datasets.at(m.method);
            if (ds.rows.size() < 2) return;
            m.forest = pf::fit_forest(ds, a.forest, hp,
                                      pf::derive_seed(*a.seed, "method", {pf::fnv1a64(m.method)}));
            m.importance_table = pf::importance(*m.forest, names);
        });
    }
    manifest.parameters["out"] = a.out_path;
    pf::write_json_output(a.out_path, pf::models_to_json(phase1.models), manifest);

    if (!a.mape_csv.empty()) {
        std::string csv = "method,test_mape,train_mape,abs_perf_ns,rel_perf\n";
        char buf[128];
        for (const auto& m : phase1.models) {
            const double tm = m.test_mape.value ? *m.test_mape.value : -1.0;
            const double trm = m.train_mape.value ? *m.train_mape.value : -1.0;
            std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%.1f,%.6f", m.method.c_str(), tm, trm,
                          m.abs_perf, m.rel_perf);
            csv += std::string(buf) + "\n";
        }
        pf::write_file(a.mape_csv, csv);
        pf::write_sibling_manifest(a.mape_csv, manifest);
    }
    std::cerr << "learned " << phase1.models.size() << " models; "
              << phase1.accuracy.under_alpha << "/" << phase1.accuracy.evaluated
              << " under alpha\n";
}

struct FilterArgs {
    std::string models_path, out_path;
    double alpha = 5.0, beta_ns = 1e7, gamma = 0.01;
};

void run_filter(const FilterArgs& a) {
    const auto models = pf::models_from_json(load_json(a.models_path));
    pf::FilterParams params{a.alpha, a.beta_ns, a.gamma};
    const auto hard = pf::select_hard(models, params);

    pf::RunManifest manifest;
    manifest.subcommand = "filter";
    manifest.add_input(a.models_path);
    manifest.parameters["models"] = a.models_path;
    manifest.parameters["alpha"] = a.alpha;
    manifest.parameters["beta_ns"] = a.beta_ns;
    manifest.parameters["gamma"] = a.gamma;

    pf::json doc;
    doc["format_version"] = pf::kFormatVersion;
    doc["filter"] = pf::filter_params_to_json(params);
    doc["hard_set"] = pf::hard_set_to_json(hard);
    pf::write_json_output(a.out_path, std::move(doc), manifest);
    std::cerr << "selected " << hard.selected.size() << " of " << models.size() << " methods\n";
}

struct PipelineArgs {
    std::string space_path, learn_path, test_path, coarse_path, test_coarse_path;
    std::string fine_path, test_fine_path, out_path;
    double alpha = 5.0, beta_ns = 1e7, gamma = 0.01, tail = 0.01;
    std::size_t leaf = 2;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void run_pipeline_cmd(const PipelineArgs& a, unsigned jobs) {
    if (!a.seed_set) throw pf::UsageError("pipeline requires --seed");
    const auto space = load_space(a.space_path);
    const auto learn_set = load_sample_set(space, a.learn_path);
    const auto test_set = load_sample_set(space, a.test_path);
    const auto coarse = pf::read_coarse(a.coarse_path);
    const auto coarse_test =
        a.test_coarse_path.empty() ? coarse : pf::read_coarse(a.test_coarse_path);

    pf::RunManifest manifest;
    manifest.subcommand = "pipeline";
    manifest.seed = a.seed;
    for (const std::string& p : {a.space_path, a.learn_path, a.test_path, a.coarse_path})
        manifest.add_input(p);
    manifest.parameters["space"] = a.space_path;
    manifest.parameters["learn_set"] = a.learn_path;
    manifest.parameters["test_set"] = a.test_path;
    manifest.parameters["coarse"] = a.coarse_path;
    if (!a.test_coarse_path.empty()) {
        manifest.add_input(a.test_coarse_path);
        manifest.parameters["test_coarse"] = a.test_coarse_path;
    }
    manifest.parameters["alpha"] = a.alpha;
    manifest.parameters["beta_ns"] = a.beta_ns;
    manifest.parameters["gamma"] = a.gamma;
    manifest.parameters["tail_fraction"] = a.tail;
    manifest.parameters["min_samples_leaf"] = a.leaf;

    std::vector<pf::FineCallRecord> fine, fine_test;
    if (!a.fine_path.empty()) {
        fine = pf::read_fine(a.fine_path);
        manifest.add_input(a.fine_path);
        manifest.parameters["fine"] = a.fine_path;
        if (!a.test_fine_path.empty()) {
            fine_test = pf::read_fine(a.test_fine_path);
            manifest.add_input(a.test_fine_path);
            manifest.parameters["test_fine"] = a.test_fine_path;
        } else {
            fine_test = fine;
        }
    }

    pf::FilterParams params{a.alpha, a.beta_ns, a.gamma};
    pf::TreeHyperparams hp;
    hp.min_samples_leaf = a.leaf;
    const auto report = pf::run_pipeline(space, learn_set, test_set, coarse, coarse_test, fine,
                                         fine_test, params, hp, a.tail, jobs);
    pf::write_json_output(a.out_path, pf::pipeline_report_to_json(report), manifest);
    std::cerr << "phase 1: " << report.phase1.accuracy.under_alpha << "/"
              << report.phase1.accuracy.evaluated << " under alpha; hard set "
              << report.hard.selected.size();
    if (report.phase2)
        std::cerr << "; phase 2: " << report.phase2->accuracy.under_alpha << "/"
                  << report.phase2->accuracy.evaluated << " under alpha";
    std::cerr << "\n";
}

struct InfluenceArgs {
    std::string space_path, configs_path, coarse_path, out_path;
    std::size_t trees = 100, top_k = 2, leaf = 2;
    double coverage = 0.8, error_fraction = 0.04;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void run_influence(const InfluenceArgs& a, unsigned jobs) {
    if (!a.seed_set) throw pf::UsageError("influence requires --seed");
    const auto space = load_space(a.space_path);
    const auto set = load_sample_set(space, a.configs_path);
    const auto records = pf::read_coarse(a.coarse_path);
    pf::detail::require_coverage(set.configurations, pf::covered_configs(records), "coarse");

    pf::RunManifest manifest;
    manifest.subcommand = "influence";
    manifest.seed = a.seed;
    manifest.add_input(a.space_path);
    manifest.add_input(a.configs_path);
    manifest.add_input(a.coarse_path);
    manifest.parameters["space"] = a.space_path;
    manifest.parameters["configs"] = a.configs_path;
    manifest.parameters["coarse"] = a.coarse_path;
    manifest.parameters["trees"] = a.trees;
    manifest.parameters["top_k"] = a.top_k;
    manifest.parameters["coverage"] = a.coverage;
    manifest.parameters["error_fraction"] = a.error_fraction;

    const auto datasets = pf::aggregate_repetitions(space, set.configurations, records);
    const auto blackbox = pf::black_box_perf(datasets);
    std::vector<std::string> names;
    for (const auto& o : space.options()) names.push_back(o.name);

    pf::TreeHyperparams hp;
    hp.min_samples_leaf = a.leaf;
    pf::MethodDataset system_ds;
    system_ds.method = "<system>";
    for (const auto& c : set.configurations) {
        pf::DatasetRow row;
        row.config_id = c.id;
        row.features = pf::encode(space, c);
        row.time_ns = blackbox.count(c.id) ? blackbox.at(c.id) : 0.0;
        row.calls = 1.0;
        system_ds.rows.push_back(std::move(row));
    }
    const auto system_forest =
        pf::fit_forest(system_ds, a.trees, hp, pf::derive_seed(a.seed, "system"), jobs);
    const auto system_importance = pf::importance(system_forest, names);

    std::vector<const pf::MethodDataset*> order;
    for (const auto& [name, ds] : datasets) order.push_back(&ds);
    std::vector<std::optional<pf::ImportanceTable>> tables(order.size());
    pf::parallel_for(order.size(), jobs, [&](std::size_t i) {
        if (order[i]->rows.size() < 2) return;
        const auto forest =
            pf::fit_forest(*order[i], a.trees, hp,
                           pf::derive_seed(a.seed, "method", {pf::fnv1a64(order[i]->method)}));
        tables[i] = pf::importance(forest, names);
    });
    std::map<std::string, pf::ImportanceTable> method_importance;
    std::map<std::string, double> method_abs;
    for (std::size_t i = 0; i < order.size(); ++i) {
        method_abs[order[i]->method] = pf::abs_perf(*order[i]);
        if (tables[i]) method_importance[order[i]->method] = *tables[i];
    }
    const auto trace = pf::trace_influence(system_importance, method_importance, method_abs,
                                           a.top_k, a.coverage, a.error_fraction);

    pf::json doc;
    doc["format_version"] = pf::kFormatVersion;
    doc["system_importance"] = pf::importance_to_json(system_importance);
    doc["trace"] = pf::influence_trace_to_json(trace);
    pf::write_json_output(a.out_path, std::move(doc), manifest);
    std::cerr << "traced " << trace.terms.size() << " terms over " << trace.relevant_methods.size()
              << " relevant methods\n";
}

struct ReportArgs {
    std::string in_path, out_path, csv_dir;
};

void run_report(const ReportArgs& a) {
    const auto doc = load_json(a.in_path);
    if (!doc.contains("phase1"))
        throw pf::FormatError(a.in_path + ": not a pipeline report (missing 'phase1')");

    std::string text;
    const auto& acc1 = doc["phase1"]["accuracy"];
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "pipeline report\n  filter: alpha=%.2f%% beta=%s ms gamma=%.4f\n",
                  doc["filter"]["alpha"].get<double>(),
                  format_ms(doc["filter"]["beta_ns"].get<double>()).c_str(),
                  doc["filter"]["gamma"].get<double>());
    text += buf;
    std::snprintf(buf, sizeof buf, "  phase 1: %zu methods, %zu/%zu under alpha (%.1f%%)\n",
                  acc1["methods"].get<std::size_t>(), acc1["under_alpha"].get<std::size_t>(),
                  acc1["evaluated"].get<std::size_t>(),
                  100.0 * acc1["fraction_under_alpha"].get<double>());
    text += buf;
    text += "  hard set: " + std::to_string(doc["hard_set"].size()) + " method(s)\n";
    for (const auto& h : doc["hard_set"]) {
        std::snprintf(buf, sizeof buf, "    %s  mape=%.2f%%\n",
                      h["method"].get<std::string>().c_str(), h["mape"].get<double>());
        text += buf;
    }
    if (doc.contains("phase2")) {
        const auto& acc2 = doc["phase2"]["accuracy"];
        std::snprintf(buf, sizeof buf, "  phase 2: %zu refined, %zu/%zu under alpha\n",
                      acc2["methods"].get<std::size_t>(), acc2["under_alpha"].get<std::size_t>(),
                      acc2["evaluated"].get<std::size_t>());
        text += buf;
        for (const auto& e : doc["phase2"]["errors"])
            text += "    error: " + e.get<std::string>() + "\n";
    }
    if (doc.contains("degraded") && !doc["degraded"].empty()) {
        text += "  refit tested worse for:\n";
        for (const auto& m : doc["degraded"]) text += "    " + m.get<std::string>() + "\n";
    }

    if (a.out_path.empty())
        std::cout << text;
    else
        pf::write_file(a.out_path, text);

    if (!a.csv_dir.empty()) {
        std::filesystem::create_directories(a.csv_dir);
        for (const char* phase : {"phase1", "phase2"}) {
            if (!doc.contains(phase)) continue;
            std::string csv = "method,test_mape,train_mape,abs_perf_ns,rel_perf\n";
            for (const auto& m : doc[phase]["models"]) {
                const auto& tm = m["test_mape"]["value"];
                const auto& trm = m["train_mape"]["value"];
                std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%.1f,%.6f",
                              m["method"].get<std::string>().c_str(),
                              tm.is_number() ? tm.get<double>() : -1.0,
                              trm.is_number() ? trm.get<double>() : -1.0,
                              m["abs_perf_ns"].get<double>(), m["rel_perf"].get<double>());
                csv += std::string(buf) + "\n";
            }
            pf::write_file(a.csv_dir + "/" + phase + "_mape.csv", csv);
        }
        std::string csv = "method,mape,mape_exceeded,abs_exceeded,rel_exceeded\n";
        for (const auto& h : doc["hard_set"]) {
            std::snprintf(buf, sizeof buf, "%s,%.4f,%d,%d,%d",
                          h["method"].get<std::string>().c_str(), h["mape"].get<double>(),
                          h["mape_exceeded"].get<bool>() ? 1 : 0,
                          h["abs_exceeded"].get<bool>() ? 1 : 0,
                          h["rel_exceeded"].get<bool>() ? 1 : 0);
            csv += std::string(buf) + "\n";
        }
        pf::write_file(a.csv_dir + "/hard_set.csv", csv);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"method-level performance-influence modeling"};
    app.require_subcommand(1);
    unsigned jobs = default_jobs();
    app.add_option("--jobs", jobs, "worker threads (outputs are independent of this)")
        ->check(CLI::PositiveNumber);

    SampleArgs sample;
    auto* cmd_sample = app.add_subcommand("sample", "generate a configuration sample set");
    cmd_sample->add_option("--space", sample.space_path, "space definition JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_sample->add_option("--strategy", sample.strategy, "fw | pw | random")->required();
    cmd_sample->add_option("--design", sample.design, "numeric design, e.g. 9x3");
    cmd_sample->add_option("--k", sample.k, "random sample size");
    std::uint64_t sample_seed = 0;
    auto* sample_seed_opt = cmd_sample->add_option("--seed", sample_seed, "RNG seed");
    cmd_sample->add_option("--exclude", sample.exclude_path, "sample set to exclude")
        ->check(CLI::ExistingFile);
    cmd_sample->add_option("--max-samples", sample.max_samples,
                           "deterministic truncation cap (0 = off)");
    cmd_sample->add_option("--out", sample.out_path, "output JSON")->required();
    cmd_sample->callback([&] {
        if (!sample_seed_opt->empty()) sample.seed = sample_seed;
        run_sample(sample);
    });

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "generate a synthetic system and its traces");
    cmd_sim->add_option("--profile", sim.profile_path, "generator profile JSON")
        ->check(CLI::ExistingFile);
    cmd_sim->add_option("--system", sim.system_path, "existing ground-truth system JSON")
        ->check(CLI::ExistingFile);
    cmd_sim->add_option("--configs", sim.configs_path, "sample set to simulate")
        ->check(CLI::ExistingFile);
    cmd_sim->add_option("--methods", sim.methods_path, "'all' or file with one method per line");
    cmd_sim->add_option("--repetitions", sim.repetitions, "runs per configuration")
        ->check(CLI::PositiveNumber);
    auto* sim_seed_opt = cmd_sim->add_option("--seed", sim.seed, "RNG seed");
    cmd_sim->add_option("--out-system", sim.out_system, "write the ground-truth system JSON");
    cmd_sim->add_option("--out-space", sim.out_space, "write the space JSON");
    cmd_sim->add_option("--coarse", sim.coarse_path, "write coarse CSV (.csv or .csv.gz)");
    cmd_sim->add_option("--fine", sim.fine_path, "write fine CSV (.csv or .csv.gz)");
    cmd_sim->add_option("--blackbox", sim.blackbox_path, "write blackbox CSV");
    cmd_sim->callback([&] {
        sim.seed_set = !sim_seed_opt->empty();
        run_simulate(sim, jobs);
    });

    VarianceArgs var;
    auto* cmd_var = app.add_subcommand("variance", "variance decomposition report");
    cmd_var->add_option("--space", var.space_path, "space JSON")->required()->check(CLI::ExistingFile);
    cmd_var->add_option("--configs", var.configs_path, "sample set JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_var->add_option("--coarse", var.coarse_path, "coarse trace CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_var->add_option("--fine", var.fine_path, "fine trace CSV")->check(CLI::ExistingFile);
    cmd_var->add_option("--bound", var.bound, "measurement-variance bound (default 0.04)");
    cmd_var->add_option("--out", var.out_path, "report JSON")->required();
    cmd_var->add_option("--csv", var.csv_path, "per-method cv table, sorted descending");
    cmd_var->add_option("--hist-dir", var.hist_dir, "directory for per-method histograms");
    cmd_var->callback([&] { run_variance(var); });

    LearnArgs learn;
    auto* cmd_learn = app.add_subcommand("learn", "fit per-method models from coarse traces");
    cmd_learn->add_option("--space", learn.space_path, "space JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_learn->add_option("--configs", learn.configs_path, "learning sample set")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_learn->add_option("--coarse", learn.coarse_path, "coarse trace CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_learn->add_option("--test-configs", learn.test_configs_path, "test sample set")
        ->check(CLI::ExistingFile);
    cmd_learn->add_option("--test-coarse", learn.test_coarse_path,
                          "coarse CSV for the test set (defaults to --coarse)")
        ->check(CLI::ExistingFile);
    cmd_learn->add_option("--leaf", learn.leaf, "min samples per leaf (default 2)")
        ->check(CLI::PositiveNumber);
    cmd_learn->add_option("--depth", learn.depth, "max depth (0 = unlimited)");
    cmd_learn->add_option("--forest", learn.forest, "also fit forests with N trees");
    std::uint64_t learn_seed = 0;
    auto* learn_seed_opt = cmd_learn->add_option("--seed", learn_seed, "RNG seed (forests)");
    cmd_learn->add_option("--alpha", learn.alpha, "accuracy threshold, percent");
    cmd_learn->add_option("--out", learn.out_path, "model bundle JSON")->required();
    cmd_learn->add_option("--mape-csv", learn.mape_csv, "per-method error table");
    cmd_learn->callback([&] {
        if (!learn_seed_opt->empty()) learn.seed = learn_seed;
        run_learn(learn, jobs);
    });

    FilterArgs filter;
    auto* cmd_filter = app.add_subcommand("filter", "select hard methods from a model bundle");
    cmd_filter->add_option("--models", filter.models_path, "model bundle JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_filter->add_option("--alpha", filter.alpha, "error floor, percent (default 5)");
    cmd_filter->add_option("--beta-ns", filter.beta_ns, "absolute time floor, ns (default 1e7)");
    cmd_filter->add_option("--gamma", filter.gamma, "relative share floor (default 0.01)");
    cmd_filter->add_option("--out", filter.out_path, "hard-set JSON")->required();
    cmd_filter->callback([&] { run_filter(filter); });

    PipelineArgs pipe;
    auto* cmd_pipe = app.add_subcommand("pipeline", "coarse learn, filter, fine refit");
    cmd_pipe->add_option("--space", pipe.space_path, "space JSON")->required()->check(CLI::ExistingFile);
    cmd_pipe->add_option("--learn-set", pipe.learn_path, "learning sample set")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_pipe->add_option("--test-set", pipe.test_path, "test sample set")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_pipe->add_option("--coarse", pipe.coarse_path, "coarse trace CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_pipe->add_option("--test-coarse", pipe.test_coarse_path,
                         "coarse CSV for the test set (defaults to --coarse)")
        ->check(CLI::ExistingFile);
    cmd_pipe->add_option("--fine", pipe.fine_path, "fine trace CSV for the hard methods")
        ->check(CLI::ExistingFile);
    cmd_pipe->add_option("--test-fine", pipe.test_fine_path,
                         "fine CSV for the test set (defaults to --fine)")
        ->check(CLI::ExistingFile);
    cmd_pipe->add_option("--alpha", pipe.alpha, "error floor, percent");
    cmd_pipe->add_option("--beta-ns", pipe.beta_ns, "absolute time floor, ns");
    cmd_pipe->add_option("--gamma", pipe.gamma, "relative share floor");
    cmd_pipe->add_option("--tail", pipe.tail, "outlier tail fraction (default 0.01)");
    cmd_pipe->add_option("--leaf", pipe.leaf, "min samples per leaf");
    auto* pipe_seed_opt = cmd_pipe->add_option("--seed", pipe.seed, "RNG seed");
    cmd_pipe->add_option("--out", pipe.out_path, "report JSON")->required();
    cmd_pipe->callback([&] {
        pipe.seed_set = !pipe_seed_opt->empty();
        run_pipeline_cmd(pipe, jobs);
    });

    InfluenceArgs infl;
    auto* cmd_infl = app.add_subcommand("influence", "trace option influences to methods");
    cmd_infl->add_option("--space", infl.space_path, "space JSON")->required()->check(CLI::ExistingFile);
    cmd_infl->add_option("--configs", infl.configs_path, "learning sample set")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_infl->add_option("--coarse", infl.coarse_path, "coarse trace CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_infl->add_option("--trees", infl.trees, "trees per forest (default 100)");
    cmd_infl->add_option("--top-k", infl.top_k, "terms to trace (default 2)");
    cmd_infl->add_option("--coverage", infl.coverage, "share of system time to cover (default 0.8)");
    cmd_infl->add_option("--error-fraction", infl.error_fraction,
                         "per-method error bound as a fraction of its mean time");
    cmd_infl->add_option("--leaf", infl.leaf, "min samples per leaf");
    auto* infl_seed_opt = cmd_infl->add_option("--seed", infl.seed, "RNG seed");
    cmd_infl->add_option("--out", infl.out_path, "trace JSON")->required();
    cmd_infl->callback([&] {
        infl.seed_set = !infl_seed_opt->empty();
        run_influence(infl, jobs);
    });

    ReportArgs rep;
    auto* cmd_rep = app.add_subcommand("report", "render a pipeline report");
    cmd_rep->add_option("--in", rep.in_path, "pipeline report JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_rep->add_option("--out", rep.out_path, "summary text file (default: stdout)");
    cmd_rep->add_option("--csv-dir", rep.csv_dir, "directory for report CSVs");
    cmd_rep->callback([&] { run_report(rep); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const pf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
