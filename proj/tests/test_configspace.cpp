#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

#include <algorithm>
#include <set>

namespace pf = perfluence;
using pft::binary;
using pft::binary_space;
using pft::numeric;

TEST_CASE("space construction rejects malformed options") {
    REQUIRE_THROWS_AS(pf::ConfigurationSpace({binary("A"), binary("A")}, {}), pf::FormatError);
    REQUIRE_THROWS_AS(pf::ConfigurationSpace({numeric("n", {}, 0)}, {}), pf::FormatError);
    REQUIRE_THROWS_AS(pf::ConfigurationSpace({numeric("n", {2, 1}, 1)}, {}), pf::FormatError);
    REQUIRE_THROWS_AS(pf::ConfigurationSpace({numeric("n", {1, 2}, 3)}, {}), pf::FormatError);
    REQUIRE_THROWS_AS(pf::ConfigurationSpace({binary("")}, {}), pf::FormatError);
}

TEST_CASE("constraints may only mention binary options") {
    REQUIRE_THROWS_AS(pf::ConfigurationSpace({binary("A"), numeric("n", {1, 2}, 1)}, {"implies A n"}),
                      pf::FormatError);
    REQUIRE_THROWS_AS(binary_space(2, {"implies o0 nosuch"}), pf::FormatError);
}

TEST_CASE("validate checks totality, domains, and constraints") {
    pf::ConfigurationSpace space({binary("A"), binary("B")}, {"implies A B"});

    CHECK(pf::validate(space, pf::Assignment{{"A", 1.0}, {"B", 1.0}}));
    CHECK_FALSE(pf::validate(space, pf::Assignment{{"A", 1.0}, {"B", 0.0}}));
    CHECK(pf::validate(space, pf::Assignment{{"A", 0.0}, {"B", 0.0}}));
    // partial assignments are not valid configurations
    CHECK_FALSE(pf::validate(space, pf::Assignment{{"A", 1.0}}));
    // out-of-domain binary value
    CHECK_FALSE(pf::validate(space, pf::Assignment{{"A", 2.0}, {"B", 1.0}}));
    REQUIRE_THROWS_AS(pf::validate(space, pf::Assignment{{"C", 1.0}}), pf::DataError);

    pf::ConfigurationSpace nspace({numeric("n", {1, 2, 4}, 2)}, {});
    CHECK(pf::validate(nspace, pf::Assignment{{"n", 4.0}}));
    CHECK_FALSE(pf::validate(nspace, pf::Assignment{{"n", 3.0}}));
}

TEST_CASE("enumerate_valid lists configurations in lexicographic option order") {
    SECTION("unconstrained binary cube") {
        auto all = pf::enumerate_valid(binary_space(3));
        REQUIRE(all.size() == 8);
        CHECK(all.front().values == std::vector<double>{0, 0, 0});
        CHECK(all.back().values == std::vector<double>{1, 1, 1});
        // last option varies fastest
        CHECK(all[1].values == std::vector<double>{0, 0, 1});
    }
    SECTION("implication removes exactly one of four") {
        pf::ConfigurationSpace space({binary("A"), binary("B")}, {"implies A B"});
        auto all = pf::enumerate_valid(space);
        REQUIRE(all.size() == 3);
        CHECK(all[0].values == std::vector<double>{0, 0});
        CHECK(all[1].values == std::vector<double>{0, 1});
        CHECK(all[2].values == std::vector<double>{1, 1});
    }
    SECTION("numeric domains multiply the count") {
        pf::ConfigurationSpace space({binary("A"), numeric("n", {1, 2, 4}, 1)}, {});
        CHECK(pf::enumerate_valid(space).size() == 6);
    }
    SECTION("candidate limit guards huge spaces") {
        REQUIRE_THROWS_AS(pf::enumerate_valid(binary_space(17)), pf::DegenerateError);
        CHECK(pf::enumerate_valid(binary_space(16)).size() == (1u << 16));
    }
}

TEST_CASE("enumerate_valid agrees with per-assignment validation") {
    // independent oracle: check every odometer assignment with validate()
    pf::ConfigurationSpace space(
        {binary("a"), binary("b"), binary("c"), numeric("n", {1, 3}, 1)},
        {"implies a b", "or b c", "not (and a c)"});
    auto listed = pf::enumerate_valid(space);
    std::set<std::uint64_t> listed_ids;
    for (const auto& c : listed) listed_ids.insert(c.id);

    std::size_t valid_count = 0;
    for (double a : {0.0, 1.0})
        for (double b : {0.0, 1.0})
            for (double c : {0.0, 1.0})
                for (double n : {1.0, 3.0}) {
                    pf::Assignment asg{{"a", a}, {"b", b}, {"c", c}, {"n", n}};
                    if (!pf::validate(space, asg)) continue;
                    ++valid_count;
                    CHECK(listed_ids.count(pf::make_configuration(space, asg).id) == 1);
                }
    CHECK(listed.size() == valid_count);
}

TEST_CASE("find_valid completes deterministically, false-first and default-first") {
    SECTION("unconstrained completion is all-false, numeric default") {
        pf::ConfigurationSpace space({binary("A"), binary("B"), numeric("n", {1, 2, 4}, 2)}, {});
        auto cfg = pf::find_valid(space, {});
        CHECK(cfg.values == std::vector<double>{0, 0, 2});
    }
    SECTION("requirements propagate through constraints") {
        pf::ConfigurationSpace space({binary("A"), binary("B")}, {"implies A B"});
        auto cfg = pf::find_valid(space, {{"A", 1.0}});
        CHECK(cfg.values == std::vector<double>{1, 1});
    }
    SECTION("repeated calls return the same configuration") {
        pf::ConfigurationSpace space(
            {binary("a"), binary("b"), binary("c")}, {"or a b", "not (and a b)"});
        auto c1 = pf::find_valid(space, {});
        auto c2 = pf::find_valid(space, {});
        CHECK(c1.values == c2.values);
        CHECK(c1.id == c2.id);
    }
    SECTION("contradiction reports the conflicting constraint sources") {
        pf::ConfigurationSpace space({binary("A")}, {"A", "not A"});
        try {
            pf::find_valid(space, {});
            FAIL("expected UnsatError");
        } catch (const pf::UnsatError& e) {
            auto& cs = e.conflicting_constraints;
            CHECK(std::find(cs.begin(), cs.end(), "A") != cs.end());
            CHECK(std::find(cs.begin(), cs.end(), "not A") != cs.end());
        }
    }
    SECTION("out-of-domain requirement is a data error") {
        pf::ConfigurationSpace space({numeric("n", {1, 2}, 1)}, {});
        REQUIRE_THROWS_AS(pf::find_valid(space, {{"n", 9.0}}), pf::DataError);
    }
}

TEST_CASE("configuration ids are stable and collision-free across a space") {
    auto space = binary_space(10);
    auto all = pf::enumerate_valid(space);
    REQUIRE(all.size() == 1024);
    std::set<std::uint64_t> ids;
    for (const auto& c : all) ids.insert(c.id);
    CHECK(ids.size() == all.size());

    // id depends only on the canonical assignment text
    auto again = pf::make_configuration(space, all[17].values);
    CHECK(again.id == all[17].id);
}

TEST_CASE("encode and decode are inverse on valid configurations") {
    pf::ConfigurationSpace space({binary("A"), binary("B"), numeric("n", {1, 2, 4}, 1)},
                                 {"implies A B"});
    auto cfg = pf::make_configuration(space, pf::Assignment{{"A", 1.0}, {"B", 1.0}, {"n", 4.0}});
    auto x = pf::encode(space, cfg);
    CHECK(x == std::vector<double>{1, 1, 4});
    auto back = pf::decode(space, x);
    CHECK(back.values == cfg.values);
    CHECK(back.id == cfg.id);

    // decode validates
    REQUIRE_THROWS_AS(pf::decode(space, {1, 0, 4}), pf::DataError);
    REQUIRE_THROWS_AS(pf::decode(space, {1, 1}), pf::DataError);
}

TEST_CASE("constraint grammar covers and, or, not, implies, and nesting") {
    pf::ConfigurationSpace space(
        {binary("a"), binary("b"), binary("c")},
        {"implies (and a b) c", "or (not a) (or b c)"});
    CHECK(pf::validate(space, pf::Assignment{{"a", 1.0}, {"b", 1.0}, {"c", 1.0}}));
    CHECK_FALSE(pf::validate(space, pf::Assignment{{"a", 1.0}, {"b", 1.0}, {"c", 0.0}}));
    CHECK(pf::validate(space, pf::Assignment{{"a", 0.0}, {"b", 0.0}, {"c", 0.0}}));

    REQUIRE_THROWS_WITH(binary_space(2, {"xor o0 o1"}),
                        Catch::Matchers::ContainsSubstring("xor"));
}

TEST_CASE("space JSON round-trips, including range domains") {
    pf::ConfigurationSpace space({binary("A"), numeric("n", {1, 2, 4, 8}, 2)}, {"not A"});
    auto doc = pf::space_to_json(space);
    auto back = pf::space_from_json(doc);
    REQUIRE(back.size() == 2);
    CHECK(back.options()[1].domain == std::vector<double>{1, 2, 4, 8});
    CHECK(back.options()[1].default_value == 2.0);
    CHECK(back.constraints().size() == 1);

    pf::json ranged = {
        {"format_version", 1},
        {"options",
         {{{"name", "k"}, {"kind", "numeric"}, {"range", {{"min", 0}, {"max", 10}, {"step", 5}}},
           {"default", 5}}}},
        {"constraints", pf::json::array()}};
    auto rspace = pf::space_from_json(ranged);
    CHECK(rspace.options()[0].domain == std::vector<double>{0, 5, 10});

    SECTION("missing fields are format errors") {
        pf::json bad = {{"options", {{{"kind", "binary"}}}}};
        REQUIRE_THROWS_AS(pf::space_from_json(bad), pf::FormatError);
    }
}

TEST_CASE("configuration JSON names every option and checks the id") {
    pf::ConfigurationSpace space({binary("A"), numeric("n", {1, 2}, 1)}, {});
    auto cfg = pf::make_configuration(space, pf::Assignment{{"A", 1.0}, {"n", 2.0}});
    auto ja = pf::assignment_to_json(space, cfg);
    CHECK(ja["A"].is_boolean());
    CHECK(ja["A"].get<bool>());
    CHECK(ja["n"].get<double>() == 2.0);
    auto back = pf::configuration_from_json(space, ja);
    CHECK(back.id == cfg.id);
}
