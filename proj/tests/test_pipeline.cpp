#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <algorithm>

namespace pf = perfluence;
using Catch::Approx;
using pft::binary;
using pft::binary_space;
using pft::numeric;

namespace {

pf::MethodDataset two_rows(const char* name, std::uint64_t id0, double t0, std::uint64_t id1,
                           double t1) {
    pf::MethodDataset ds;
    ds.method = name;
    ds.rows.push_back({id0, {0}, t0, 1});
    ds.rows.push_back({id1, {1}, t1, 1});
    return ds;
}

pf::PerfModel stub_model(const char* name, std::optional<double> test_mape, double abs,
                         double rel) {
    pf::PerfModel m;
    m.method = name;
    m.test_mape.value = test_mape;
    m.abs_perf = abs;
    m.rel_perf = rel;
    return m;
}

pf::ImportanceTable table_of(std::vector<pf::ImportanceEntry> entries) {
    pf::ImportanceTable t;
    t.entries = std::move(entries);
    t.total_decrease = 1.0;
    std::sort(t.entries.begin(), t.entries.end(),
              [](const pf::ImportanceEntry& a, const pf::ImportanceEntry& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.term < b.term;
              });
    return t;
}

}  // namespace

TEST_CASE("black-box time is the sum of per-method times per configuration") {
    std::map<std::string, pf::MethodDataset> ds;
    ds.emplace("m", two_rows("m", 1, 100, 2, 150));
    ds.emplace("k", two_rows("k", 1, 50, 2, 50));
    auto bb = pf::black_box_perf(ds);
    CHECK(bb.at(1) == 150.0);
    CHECK(bb.at(2) == 200.0);
}

TEST_CASE("absolute and relative method weight") {
    auto m = two_rows("m", 1, 100, 2, 150);
    auto k = two_rows("k", 1, 50, 2, 50);
    std::map<std::string, pf::MethodDataset> ds;
    ds.emplace("m", m);
    ds.emplace("k", k);
    auto bb = pf::black_box_perf(ds);

    CHECK(pf::abs_perf(m) == 125.0);
    CHECK(pf::abs_perf(k) == 50.0);
    CHECK(pf::rel_perf(m, bb) == Approx((100.0 / 150.0 + 150.0 / 200.0) / 2));
    CHECK(pf::rel_perf(k, bb) == Approx((50.0 / 150.0 + 50.0 / 200.0) / 2));

    SECTION("a method with no time everywhere weighs nothing") {
        auto dead = two_rows("dead", 1, 0, 2, 0);
        CHECK(pf::abs_perf(dead) == 0.0);
        CHECK(pf::rel_perf(dead, bb) == 0.0);
    }
    SECTION("zero-time configurations are skipped in the relative share") {
        std::map<std::uint64_t, double> bb2 = {{1, 0.0}, {2, 200.0}};
        CHECK(pf::rel_perf(m, bb2) == Approx(0.75));
    }
}

TEST_CASE("the filter predicate requires error and relevance") {
    pf::FilterParams p;  // alpha 5 %, beta 10 ms, gamma 1 %
    CHECK(pf::phi(10.0, 2e7, 0.005, p));       // inaccurate and absolutely heavy
    CHECK(pf::phi(10.0, 5e6, 0.02, p));        // inaccurate and relatively heavy
    CHECK_FALSE(pf::phi(3.0, 1e9, 0.9, p));    // accurate enough
    CHECK_FALSE(pf::phi(10.0, 5e6, 0.005, p)); // inaccurate but irrelevant
    CHECK_FALSE(pf::phi(std::nullopt, 1e9, 0.9, p));  // never observed running
    SECTION("thresholds are inclusive") {
        CHECK(pf::phi(5.0, 1e7, 0.0, p));
        CHECK(pf::phi(5.0, 0.0, 0.01, p));
        CHECK_FALSE(pf::phi(4.999, 1e7, 0.01, p));
    }
}

TEST_CASE("hard-method selection sorts by error and records the reasons") {
    std::vector<pf::PerfModel> models;
    models.push_back(stub_model("b.heavy", 10.0, 2e7, 0.005));
    models.push_back(stub_model("a.broad", 10.0, 5e6, 0.02));
    models.push_back(stub_model("c.fine", 3.0, 1e9, 0.9));
    models.push_back(stub_model("d.small", 10.0, 5e6, 0.005));
    models.push_back(stub_model("e.dead", std::nullopt, 1e9, 0.9));
    models.push_back(stub_model("f.worst", 40.0, 2e7, 0.5));

    auto hard = pf::select_hard(models, {});
    REQUIRE(hard.names() == std::vector<std::string>{"f.worst", "a.broad", "b.heavy"});
    CHECK(hard.contains("b.heavy"));
    CHECK_FALSE(hard.contains("c.fine"));
    CHECK(hard.selected[0].abs_exceeded);
    CHECK(hard.selected[0].rel_exceeded);
    CHECK(hard.selected[2].abs_exceeded);
    CHECK_FALSE(hard.selected[2].rel_exceeded);

    SECTION("raising any threshold never adds methods") {
        auto base_names = hard.names();
        for (pf::FilterParams p :
             {pf::FilterParams{15.0, 1e7, 0.01}, pf::FilterParams{5.0, 5e7, 0.01},
              pf::FilterParams{5.0, 1e7, 0.1}, pf::FilterParams{45.0, 8e7, 0.6}}) {
            for (const auto& name : pf::select_hard(models, p).names()) {
                INFO("with alpha=" << p.alpha << " beta=" << p.beta_ns << " gamma=" << p.gamma);
                CHECK(std::find(base_names.begin(), base_names.end(), name) != base_names.end());
            }
        }
    }
    SECTION("lowering the floors admits the small inaccurate method") {
        auto wide = pf::select_hard(models, {5.0, 1e6, 0.001});
        CHECK(wide.contains("d.small"));
    }
}

TEST_CASE("accuracy summaries count only evaluated methods") {
    std::vector<pf::PerfModel> models;
    models.push_back(stub_model("a", 2.0, 0, 0));
    models.push_back(stub_model("b", 8.0, 0, 0));
    models.push_back(stub_model("c", std::nullopt, 0, 0));
    auto s = pf::summarize_accuracy(models, 5.0);
    CHECK(s.methods == 3);
    CHECK(s.evaluated == 2);
    CHECK(s.under_alpha == 1);
    CHECK(s.fraction_under_alpha == 0.5);
}

TEST_CASE("phase 1 learns exact models from noise-free coarse traces") {
    auto space = binary_space(1);
    auto all = pf::enumerate_valid(space);
    pf::SampleSet set;
    set.configurations = all;

    std::vector<pf::CoarseRecord> records;
    for (int rep = 0; rep < 2; ++rep) {
        records.push_back({all[0].id, rep, "m", 100, 2});
        records.push_back({all[1].id, rep, "m", 150, 2});
        records.push_back({all[0].id, rep, "k", 100, 1});
        records.push_back({all[1].id, rep, "k", 100, 1});
    }
    pf::TreeHyperparams hp;
    hp.min_samples_leaf = 1;
    auto phase1 = pf::run_phase1(space, set, set, records, records, hp);

    CHECK(phase1.accuracy.fraction_under_alpha == 1.0);
    REQUIRE(phase1.models.size() == 2);
    const auto& k = phase1.models[0];
    const auto& m = phase1.models[1];
    REQUIRE(m.method == "m");
    REQUIRE(k.method == "k");
    CHECK(*m.test_mape.value == 0.0);
    CHECK(m.abs_perf == 125.0);
    CHECK(m.rel_perf == Approx((0.5 + 0.6) / 2));
    CHECK(k.rel_perf == Approx((0.5 + 0.4) / 2));
    CHECK(m.predict({0}) == 100.0);
    CHECK(m.predict({1}) == 150.0);

    SECTION("a sampled configuration missing from the traces is an error") {
        std::vector<pf::CoarseRecord> partial = {{all[0].id, 0, "m", 100, 2}};
        REQUIRE_THROWS_WITH(pf::run_phase1(space, set, set, partial, partial, hp),
                            Catch::Matchers::ContainsSubstring(pf::to_hex16(all[1].id)));
    }
}

TEST_CASE("phase 2 refits hard methods from filtered fine traces") {
    auto space = binary_space(1);
    auto all = pf::enumerate_valid(space);
    pf::SampleSet set;
    set.configurations = all;

    pf::HardSet hard;
    hard.selected.push_back({"m", 50.0, true, true, false});
    hard.selected.push_back({"ghost", 20.0, true, true, false});

    std::vector<pf::FineCallRecord> fine;
    for (const auto& cfg : all)
        for (int rep = 0; rep < 2; ++rep)
            for (std::uint64_t i = 0; i < 5; ++i)
                fine.push_back({cfg.id, rep, "m", i, cfg.values[0] == 1.0 ? 300u : 100u});

    pf::TreeHyperparams hp;
    hp.min_samples_leaf = 1;
    auto phase2 = pf::run_phase2(space, hard, set, set, fine, fine, hp);

    REQUIRE(phase2.models.size() == 1);
    CHECK(phase2.models[0].method == "m");
    CHECK(*phase2.models[0].test_mape.value == 0.0);
    // 5 calls per run, one tail call dropped by the 1 % filter
    CHECK(phase2.models[0].predict({0}) == 400.0);
    CHECK(phase2.models[0].predict({1}) == 1200.0);
    REQUIRE(phase2.errors.size() == 1);
    CHECK_THAT(phase2.errors[0], Catch::Matchers::ContainsSubstring("ghost"));
    CHECK_FALSE(phase2.group_stats.empty());
}

TEST_CASE("the full pipeline is deterministic and improves hard methods") {
    pf::GeneratorProfile profile;
    profile.methods = 8;
    profile.binary_options = 4;
    profile.numeric_options = 1;
    profile.sensitive_fraction = 0.25;
    profile.contaminated = 2;
    profile.sigma = 0.15;
    profile.contamination_p = 0.01;
    auto sys = pf::gen_system(profile, 11);

    auto learn = pf::sample_pair_wise(sys.space);
    auto design = pf::plackett_burman({sys.space.options()[4]}, {9, 3});
    learn = pf::compose_samples(learn, design, sys.space);
    auto test = pf::sample_random(sys.space, 12, 21, &learn);

    std::vector<pf::CoarseRecord> coarse, coarse_test;
    std::vector<pf::FineCallRecord> fine, fine_test;
    std::vector<std::size_t> all_methods;
    for (std::size_t i = 0; i < sys.methods.size(); ++i) all_methods.push_back(i);
    for (const auto& cfg : learn.configurations) {
        auto c = pf::simulate_coarse(sys, cfg, 5, 1001);
        coarse.insert(coarse.end(), c.begin(), c.end());
        auto f = pf::simulate_fine(sys, cfg, all_methods, 5, 1001);
        fine.insert(fine.end(), f.begin(), f.end());
    }
    for (const auto& cfg : test.configurations) {
        auto c = pf::simulate_coarse(sys, cfg, 5, 1002);
        coarse_test.insert(coarse_test.end(), c.begin(), c.end());
        auto f = pf::simulate_fine(sys, cfg, all_methods, 5, 1002);
        fine_test.insert(fine_test.end(), f.begin(), f.end());
    }

    auto report =
        pf::run_pipeline(sys.space, learn, test, coarse, coarse_test, fine, fine_test, {}, {});
    CHECK(report.phase1.models.size() == 8);
    CHECK(report.phase1.accuracy.fraction_under_alpha > 0.5);

    SECTION("reruns and parallel runs give identical reports") {
        auto again =
            pf::run_pipeline(sys.space, learn, test, coarse, coarse_test, fine, fine_test, {}, {});
        CHECK(pf::pipeline_report_to_json(report).dump() ==
              pf::pipeline_report_to_json(again).dump());
        auto parallel = pf::run_pipeline(sys.space, learn, test, coarse, coarse_test, fine,
                                         fine_test, {}, {}, 0.01, 4);
        CHECK(pf::pipeline_report_to_json(report).dump() ==
              pf::pipeline_report_to_json(parallel).dump());
    }
    SECTION("final models prefer the refit where it exists") {
        auto finals = pf::final_models(report);
        CHECK(finals.size() == 8);
        if (report.phase2) {
            for (const auto& refit : report.phase2->models) {
                auto it = std::find_if(finals.begin(), finals.end(),
                                       [&](const pf::PerfModel& m) {
                                           return m.method == refit.method;
                                       });
                REQUIRE(it != finals.end());
                CHECK(it->abs_perf == refit.abs_perf);
            }
        }
    }
    SECTION("an empty hard set skips phase 2") {
        pf::FilterParams strict;
        strict.alpha = 1e9;
        auto lax = pf::run_pipeline(sys.space, learn, test, coarse, coarse_test, fine, fine_test,
                                    strict, {});
        CHECK(lax.hard.selected.empty());
        CHECK_FALSE(lax.phase2.has_value());
    }
}

TEST_CASE("influence tracing lists the methods that realize each term") {
    auto system = table_of({{"A", 0.6, false}, {"A*B", 0.3, true}, {"B", 0.1, false}});
    std::map<std::string, pf::ImportanceTable> per_method;
    per_method.emplace("m1", table_of({{"A", 0.8, false}}));
    per_method.emplace("m2", table_of({{"A", 0.5, false}, {"A*B", 0.6, true}}));
    per_method.emplace("m3", table_of({{"A", 0.9, false}}));  // not performance-relevant
    std::map<std::string, double> abs = {{"m1", 1000}, {"m2", 500}, {"m3", 300}, {"m4", 10}};

    auto trace = pf::trace_influence(system, per_method, abs, 2, 0.8, 0.04);
    CHECK(trace.relevant_methods == std::vector<std::string>{"m1", "m2"});
    CHECK(trace.covered_share == Approx(1500.0 / 1810.0));
    REQUIRE(trace.terms.size() == 2);

    const auto& term_a = trace.terms[0];
    CHECK(term_a.term == "A");
    REQUIRE(term_a.methods.size() == 2);
    CHECK(term_a.methods[0].method == "m1");
    CHECK(term_a.methods[0].effect == Approx(800.0));
    CHECK(term_a.methods[1].method == "m2");
    CHECK(term_a.methods[1].effect == Approx(250.0));

    const auto& term_ab = trace.terms[1];
    CHECK(term_ab.term == "A*B");
    REQUIRE(term_ab.methods.size() == 1);
    CHECK(term_ab.methods[0].method == "m2");

    SECTION("a harsh error bound silences weak attributions") {
        auto strict = pf::trace_influence(system, per_method, abs, 2, 0.8, 0.7);
        CHECK(strict.terms[0].methods.size() == 1);  // only m1 at 0.8 clears 0.7
        CHECK(strict.terms[1].methods.empty());
    }
    SECTION("coverage 1.0 pulls in every method") {
        auto full = pf::trace_influence(system, per_method, abs, 1, 1.0, 0.04);
        CHECK(full.relevant_methods.size() == 4);
        CHECK(full.covered_share == Approx(1.0));
    }
}

TEST_CASE("overhead studies split correlation by grouping level") {
    pf::ConfigurationSpace space({binary("b0"), binary("b1"), numeric("s", {1, 2, 4}, 1)}, {});
    auto configs = pf::enumerate_valid(space);
    REQUIRE(configs.size() == 12);

    std::map<std::uint64_t, double> unprofiled, profiled_const, profiled_sloped;
    for (const auto& c : configs) {
        const double base = 100 + 37 * c.values[0] + 11 * c.values[1];
        unprofiled[c.id] = base;
        profiled_const[c.id] = base * 1.3;
        profiled_sloped[c.id] = base * (1.0 + 0.6 * c.values[2]);
    }

    SECTION("a constant factor keeps both coefficients at 1") {
        auto rep = pf::overhead_study(unprofiled, profiled_const, space, configs, "s");
        CHECK(*rep.global.pearson == Approx(1.0));
        CHECK(*rep.global.spearman == Approx(1.0));
        REQUIRE(rep.per_level.size() == 3);
        for (const auto& [level, r] : rep.per_level) CHECK(*r.pearson == Approx(1.0));
        CHECK(rep.skipped_levels.empty());
    }
    SECTION("an option-dependent factor degrades only the global view") {
        auto rep = pf::overhead_study(unprofiled, profiled_sloped, space, configs, "s");
        CHECK(*rep.global.pearson < 0.9);
        REQUIRE(rep.per_level.size() == 3);
        for (const auto& [level, r] : rep.per_level) {
            CHECK(*r.pearson == Approx(1.0));
            CHECK(*r.spearman == Approx(1.0));
        }
    }
    SECTION("no grouping option means a global report only") {
        auto rep = pf::overhead_study(unprofiled, profiled_const, space, configs);
        CHECK(rep.per_level.empty());
        CHECK(*rep.global.pearson == Approx(1.0));
    }
    SECTION("levels with too few configurations are skipped") {
        // keep only 2 configurations at level 4
        std::vector<pf::Configuration> subset;
        std::map<std::uint64_t, double> u2, p2;
        for (const auto& c : configs)
            if (c.values[2] != 4.0 || c.values[0] == 0.0) subset.push_back(c);
        for (const auto& c : subset) {
            u2[c.id] = unprofiled[c.id];
            p2[c.id] = profiled_const[c.id];
        }
        auto rep = pf::overhead_study(u2, p2, space, subset, "s");
        REQUIRE(rep.skipped_levels.size() == 1);
        CHECK(rep.skipped_levels[0] == 4.0);
        CHECK(rep.per_level.size() == 2);
    }
}
