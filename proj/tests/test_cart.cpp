#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace pf = perfluence;
using Catch::Approx;
using pft::binary_space;
using pft::numeric;

namespace {

pf::MethodDataset grid_dataset(const pf::ConfigurationSpace& space,
                               const std::function<double(const pf::FeatureVector&)>& f) {
    pf::MethodDataset ds;
    ds.method = "m";
    for (const auto& c : pf::enumerate_valid(space)) {
        pf::DatasetRow row;
        row.config_id = c.id;
        row.features = pf::encode(space, c);
        row.time_ns = f(row.features);
        row.calls = 1.0;
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

void check_exact(const pf::RegressionTree& tree, const pf::MethodDataset& ds, double rel = 1e-9) {
    for (const auto& r : ds.rows) {
        const double got = tree.predict(r.features);
        INFO("row with time " << r.time_ns);
        if (r.time_ns == 0.0)
            CHECK(std::abs(got) <= rel);
        else
            CHECK(std::abs(got - r.time_ns) <= rel * std::abs(r.time_ns));
    }
}

}  // namespace

TEST_CASE("a constant target collapses to a single leaf") {
    auto ds = grid_dataset(binary_space(3), [](const pf::FeatureVector&) { return 250.0; });
    auto tree = pf::fit_cart(ds);
    CHECK(tree.nodes.size() == 1);
    CHECK(tree.predict({0, 0, 0}) == 250.0);
    CHECK(tree.predict({1, 1, 1}) == 250.0);
}

TEST_CASE("a single binary effect learns one split at 0.5") {
    auto ds = grid_dataset(binary_space(2),
                           [](const pf::FeatureVector& x) { return 100.0 + 50.0 * x[0]; });
    auto tree = pf::fit_cart(ds);
    REQUIRE(tree.nodes.size() == 3);
    CHECK(tree.nodes[0].feature == 0);
    CHECK(tree.nodes[0].threshold == 0.5);
    check_exact(tree, ds);
}

TEST_CASE("additive and interacting binary effects fit exactly with 1-row leaves") {
    auto ds = grid_dataset(binary_space(2), [](const pf::FeatureVector& x) {
        return 100.0 + 50.0 * x[0] + 30.0 * x[1] + 20.0 * x[0] * x[1];
    });
    pf::TreeHyperparams hp;
    hp.min_samples_leaf = 1;
    check_exact(pf::fit_cart(ds, hp), ds);
}

TEST_CASE("pure interactions are reachable through zero-gain splits") {
    // XOR: no single split reduces error, yet the impure node must not leaf out
    auto ds = grid_dataset(binary_space(2), [](const pf::FeatureVector& x) {
        return x[0] != x[1] ? 100.0 : 0.0;
    });
    pf::TreeHyperparams hp;
    hp.min_samples_leaf = 1;
    check_exact(pf::fit_cart(ds, hp), ds);
}

TEST_CASE("any target table on a binary grid is reproduced exactly") {
    std::mt19937_64 urbg(2024);
    for (std::size_t d : {3u, 5u, 7u}) {
        auto space = binary_space(d);
        std::uniform_real_distribution<double> u(1e3, 1e7);
        auto ds = grid_dataset(space, [&](const pf::FeatureVector&) { return u(urbg); });
        pf::TreeHyperparams hp;
        hp.min_samples_leaf = 1;
        check_exact(pf::fit_cart(ds, hp), ds);
    }
}

TEST_CASE("hyperparameters bound the tree") {
    auto ds = grid_dataset(binary_space(3), [](const pf::FeatureVector& x) {
        return 100.0 + 50.0 * x[0] + 10.0 * x[1] + 1.0 * x[2];
    });
    SECTION("min_samples_leaf forbids lone rows") {
        auto tree = pf::fit_cart(ds);  // default leaf size 2
        for (const auto& n : tree.nodes)
            if (n.feature < 0) CHECK(n.count >= 2);
    }
    SECTION("max_depth 1 allows a single split") {
        pf::TreeHyperparams hp;
        hp.max_depth = 1;
        auto tree = pf::fit_cart(ds, hp);
        CHECK(tree.nodes.size() == 3);
        CHECK(tree.nodes[0].feature == 0);  // the dominant effect wins
    }
    SECTION("min_impurity_decrease prunes small effects") {
        pf::TreeHyperparams hp;
        hp.min_samples_leaf = 1;
        hp.min_impurity_decrease = 1e9;
        auto tree = pf::fit_cart(ds, hp);
        CHECK(tree.nodes.size() == 1);
    }
    SECTION("an impure node too small to split becomes a mean leaf") {
        auto xo = grid_dataset(binary_space(2), [](const pf::FeatureVector& x) {
            return x[0] != x[1] ? 100.0 : 0.0;
        });
        auto tree = pf::fit_cart(xo);  // leaf size 2 cannot isolate XOR cells
        for (const auto& r : xo.rows) CHECK(tree.predict(r.features) == 50.0);
    }
}

TEST_CASE("ties prefer the lower feature index and threshold") {
    auto ds = grid_dataset(binary_space(2),
                           [](const pf::FeatureVector& x) { return 10.0 * (x[0] + x[1]); });
    auto tree = pf::fit_cart(ds);
    REQUIRE(!tree.empty());
    CHECK(tree.nodes[0].feature == 0);
}

TEST_CASE("numeric splits land midway between adjacent domain values") {
    pf::ConfigurationSpace space({numeric("n", {1, 2, 4, 8}, 1)}, {});
    auto ds = grid_dataset(space,
                           [](const pf::FeatureVector& x) { return x[0] <= 2.0 ? 10.0 : 90.0; });
    pf::TreeHyperparams hp;
    hp.min_samples_leaf = 1;
    auto tree = pf::fit_cart(ds, hp);
    REQUIRE(!tree.empty());
    CHECK(tree.nodes[0].feature == 0);
    CHECK(tree.nodes[0].threshold == 3.0);  // between 2 and 4
    check_exact(tree, ds);
}

TEST_CASE("predictions stay inside the training range") {
    std::mt19937_64 urbg(77);
    std::uniform_real_distribution<double> u(1e3, 1e6);
    auto ds = grid_dataset(binary_space(5), [&](const pf::FeatureVector&) { return u(urbg); });
    double lo = 1e18, hi = 0;
    for (const auto& r : ds.rows) {
        lo = std::min(lo, r.time_ns);
        hi = std::max(hi, r.time_ns);
    }
    auto tree = pf::fit_cart(ds);
    for (const auto& r : ds.rows) {
        const double p = tree.predict(r.features);
        CHECK(p >= lo);
        CHECK(p <= hi);
    }
}

TEST_CASE("trees round-trip through JSON") {
    auto ds = grid_dataset(binary_space(3), [](const pf::FeatureVector& x) {
        return 100.0 + 50.0 * x[0] + 25.0 * x[1] * x[2];
    });
    pf::TreeHyperparams hp;
    hp.min_samples_leaf = 1;
    auto tree = pf::fit_cart(ds, hp);
    auto back = pf::tree_from_json(pf::tree_to_json(tree));
    for (const auto& r : ds.rows) CHECK(back.predict(r.features) == tree.predict(r.features));

    SECTION("corrupt child links are rejected") {
        auto doc = pf::tree_to_json(tree);
        doc["nodes"][0]["left"] = 999;
        REQUIRE_THROWS_AS(pf::tree_from_json(doc), pf::FormatError);
    }
}

TEST_CASE("forests are seed-deterministic") {
    auto ds = grid_dataset(binary_space(4), [](const pf::FeatureVector& x) {
        return 1000.0 + 400.0 * x[0] + 100.0 * x[1];
    });
    auto f1 = pf::fit_forest(ds, 20, {}, 31);
    auto f2 = pf::fit_forest(ds, 20, {}, 31);
    CHECK(pf::forest_to_json(f1).dump() == pf::forest_to_json(f2).dump());

    auto f3 = pf::fit_forest(ds, 20, {}, 32);
    CHECK(pf::forest_to_json(f1).dump() != pf::forest_to_json(f3).dump());

    SECTION("parallel fitting changes nothing") {
        auto f4 = pf::fit_forest(ds, 20, {}, 31, 4);
        CHECK(pf::forest_to_json(f1).dump() == pf::forest_to_json(f4).dump());
    }
    SECTION("forest JSON round-trips") {
        auto back = pf::forest_from_json(pf::forest_to_json(f1));
        for (const auto& r : ds.rows) CHECK(back.predict(r.features) == f1.predict(r.features));
    }
}

TEST_CASE("forests track strong effects closely") {
    auto ds = grid_dataset(binary_space(6),
                           [](const pf::FeatureVector& x) { return 1e6 + 5e5 * x[0]; });
    auto forest = pf::fit_forest(ds, 50, {}, 7);
    auto err = pf::mape([&](const pf::FeatureVector& x) { return forest.predict(x); }, ds);
    REQUIRE(err.value.has_value());
    CHECK(*err.value < 5.0);
}

TEST_CASE("importance attributes split gains to options and pairs") {
    const std::vector<std::string> names = {"o0", "o1", "o2", "o3"};
    SECTION("a lone effect owns nearly all the weight") {
        auto ds = grid_dataset(binary_space(4),
                               [](const pf::FeatureVector& x) { return 1e6 + 5e5 * x[0]; });
        auto table = pf::importance(pf::fit_forest(ds, 100, {}, 12), names);
        // bootstrap resampling leaks a little weight to spuriously
        // correlated features, so the lone effect lands near 0.9, not 1.0
        CHECK(table.score_of("o0") > 0.85);
        CHECK(table.score_of("o1") < 0.08);
        CHECK(table.entries.front().term == "o0");
    }
    SECTION("symmetric effects get symmetric scores") {
        auto ds = grid_dataset(binary_space(4), [](const pf::FeatureVector& x) {
            return 1e6 + 5e5 * x[0] + 5e5 * x[1];
        });
        auto table = pf::importance(pf::fit_forest(ds, 100, {}, 12), names);
        CHECK(std::abs(table.score_of("o0") - table.score_of("o1")) < 0.1);
    }
    SECTION("single scores sum to one whenever any split happened") {
        auto ds = grid_dataset(binary_space(4), [](const pf::FeatureVector& x) {
            return 1e6 + 3e5 * x[0] + 2e5 * x[1] * x[3];
        });
        auto table = pf::importance(pf::fit_forest(ds, 100, {}, 12), names);
        double sum = 0.0;
        for (const auto& e : table.entries)
            if (!e.is_pair) sum += e.score;
        CHECK(sum == Approx(1.0).epsilon(1e-9));
    }
    SECTION("a pure interaction surfaces as the top pair") {
        auto ds = grid_dataset(binary_space(4), [](const pf::FeatureVector& x) {
            return 1e6 + 8e5 * x[0] * x[1];
        });
        auto table = pf::importance(pf::fit_forest(ds, 100, {}, 12), names);
        double best_pair = 0.0;
        std::string best_term;
        for (const auto& e : table.entries)
            if (e.is_pair && e.score > best_pair) {
                best_pair = e.score;
                best_term = e.term;
            }
        CHECK(best_term == "o0*o1");
        CHECK(best_pair > 0.3);
    }
    SECTION("rescaling the targets keeps the ranking") {
        auto f = [](const pf::FeatureVector& x) { return 1e5 + 7e4 * x[2] + 3e4 * x[1]; };
        auto ds = grid_dataset(binary_space(4), f);
        auto scaled = ds;
        for (auto& r : scaled.rows) r.time_ns *= 1000.0;
        auto t1 = pf::importance(pf::fit_forest(ds, 60, {}, 9), names);
        auto t2 = pf::importance(pf::fit_forest(scaled, 60, {}, 9), names);
        REQUIRE(!t1.entries.empty());
        CHECK(t1.entries.front().term == t2.entries.front().term);
        CHECK(t1.score_of("o2") == Approx(t2.score_of("o2")).epsilon(1e-9));
    }
    SECTION("a constant forest has no importance entries") {
        auto ds = grid_dataset(binary_space(4), [](const pf::FeatureVector&) { return 5e5; });
        auto table = pf::importance(pf::fit_forest(ds, 10, {}, 3), names);
        CHECK(table.entries.empty());
        CHECK(table.total_decrease == 0.0);
    }
    SECTION("importance tables round-trip through JSON") {
        auto ds = grid_dataset(binary_space(4), [](const pf::FeatureVector& x) {
            return 1e6 + 8e5 * x[0] * x[1];
        });
        auto table = pf::importance(pf::fit_forest(ds, 20, {}, 12), names);
        auto back = pf::importance_from_json(pf::importance_to_json(table));
        CHECK(pf::importance_to_json(back).dump() == pf::importance_to_json(table).dump());
    }
}

TEST_CASE("mape excludes configurations where the method never ran") {
    pf::MethodDataset test;
    test.method = "m";
    for (double t : {100.0, 200.0, 0.0}) {
        pf::DatasetRow row;
        row.features = {t};
        row.time_ns = t;
        test.rows.push_back(row);
    }
    auto err = pf::mape(
        [](const pf::FeatureVector& x) { return x[0] == 100.0 ? 90.0 : 220.0; }, test);
    REQUIRE(err.value.has_value());
    CHECK(*err.value == Approx(10.0));  // mean of 10 % and 10 %
    CHECK(err.used == 2);
    CHECK(err.dead == 1);

    SECTION("a perfect predictor scores zero") {
        auto perfect = pf::mape([](const pf::FeatureVector& x) { return x[0]; }, test);
        CHECK(*perfect.value == 0.0);
    }
    SECTION("all-dead rows leave the value unset") {
        pf::MethodDataset dead;
        pf::DatasetRow row;
        row.time_ns = 0.0;
        dead.rows.push_back(row);
        auto r = pf::mape([](const pf::FeatureVector&) { return 1.0; }, dead);
        CHECK_FALSE(r.value.has_value());
        CHECK(r.dead == 1);
    }
}

TEST_CASE("models round-trip through JSON bundles") {
    auto ds = grid_dataset(binary_space(3),
                           [](const pf::FeatureVector& x) { return 1e6 + 4e5 * x[1]; });
    pf::PerfModel m;
    m.method = "app.A::run";
    m.tree = pf::fit_cart(ds);
    m.forest = pf::fit_forest(ds, 10, {}, 5);
    m.train_mape = pf::mape([&](const pf::FeatureVector& x) { return m.predict(x); }, ds);
    m.test_mape = m.train_mape;
    m.abs_perf = 1.2e6;
    m.rel_perf = 0.4;
    m.importance_table = pf::importance(*m.forest, {"o0", "o1", "o2"});

    auto doc = pf::models_to_json({m});
    auto back = pf::models_from_json(doc);
    REQUIRE(back.size() == 1);
    CHECK(back[0].method == m.method);
    CHECK(back[0].abs_perf == m.abs_perf);
    CHECK(back[0].rel_perf == m.rel_perf);
    REQUIRE(back[0].forest.has_value());
    REQUIRE(back[0].importance_table.has_value());
    CHECK(pf::models_to_json(back).dump() == doc.dump());
    for (const auto& r : ds.rows) CHECK(back[0].predict(r.features) == m.predict(r.features));
}
