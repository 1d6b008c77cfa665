#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "perfluence/cart.hpp"
#include "perfluence/parallel.hpp"

namespace perfluence {

struct Forest {
    std::vector<RegressionTree> trees;
    std::uint64_t seed = 0;

    double predict(const FeatureVector& x) const {
        if (trees.empty()) throw DataError("predict on an untrained forest");
        double sum = 0.0;
        for (const auto& t : trees) sum += t.predict(x);
        return sum / static_cast<double>(trees.size());
    }
};

/// Random forest: each tree sees a same-size bootstrap resample and, at every
/// node, a random subset of ceil(sqrt(d)) features. Tree t draws all its
/// randomness from a seed derived from (seed, t), so results are independent
/// of scheduling.
inline Forest fit_forest(const MethodDataset& dataset, std::size_t n_trees,
                         const TreeHyperparams& hp, std::uint64_t seed, unsigned jobs = 1) {
    if (dataset.rows.size() < 2) throw DataError("forest training needs at least 2 rows");
    if (n_trees < 1) throw UsageError("forest needs at least 1 tree");
    const std::size_t n = dataset.rows.size();
    const std::size_t d = dataset.rows.front().features.size();
    const auto features_per_node =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));

    Forest forest;
    forest.seed = seed;
    forest.trees.resize(n_trees);
    parallel_for(n_trees, jobs, [&](std::size_t t) {
        SplitMix64 rng(derive_seed(seed, "tree", {t}));
        std::vector<const FeatureVector*> X(n);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& row = dataset.rows[rng.next_below(n)];
            X[i] = &row.features;
            y[i] = row.time_ns;
        }
        detail::TreeBuilder builder(X, y, hp, d, features_per_node, &rng);
        forest.trees[t] = builder.build();
    });
    return forest;
}

struct ImportanceEntry {
    std::string term;  // option name, or "a*b" for a pair in option order
    double score = 0.0;
    bool is_pair = false;
};

/// Normalized split-gain attribution. Single-option scores are each option's
/// share of the total SSE decrease (they sum to 1 when any split exists);
/// a pair's score sums the decreases at nodes whose root path already split
/// on the other member, normalized by the same total.
struct ImportanceTable {
    std::vector<ImportanceEntry> entries;  // sorted by score desc, term asc
    double total_decrease = 0.0;

    double score_of(const std::string& term) const {
        for (const auto& e : entries)
            if (e.term == term) return e.score;
        return 0.0;
    }

    std::vector<ImportanceEntry> top(std::size_t k) const {
        std::vector<ImportanceEntry> out(entries.begin(),
                                         entries.begin() + std::min(k, entries.size()));
        return out;
    }
};

namespace detail {

inline void walk_importance(const RegressionTree& tree, int node, std::vector<int>& on_path,
                            std::vector<double>& singles,
                            std::map<std::pair<std::size_t, std::size_t>, double>& pairs,
                            double& total) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
    if (n.feature < 0) return;
    const auto f = static_cast<std::size_t>(n.feature);
    double decrease = n.sse - tree.nodes[static_cast<std::size_t>(n.left)].sse -
                      tree.nodes[static_cast<std::size_t>(n.right)].sse;
    if (decrease < 0.0) decrease = 0.0;
    total += decrease;
    singles[f] += decrease;
    for (std::size_t g = 0; g < singles.size(); ++g)
        if (on_path[g] > 0 && g != f)
            pairs[{std::min(f, g), std::max(f, g)}] += decrease;
    ++on_path[f];
    walk_importance(tree, n.left, on_path, singles, pairs, total);
    walk_importance(tree, n.right, on_path, singles, pairs, total);
    --on_path[f];
}

} // namespace detail

inline ImportanceTable importance(const Forest& forest,
                                  const std::vector<std::string>& feature_names) {
    ImportanceTable table;
    std::vector<double> singles(feature_names.size(), 0.0);
    std::map<std::pair<std::size_t, std::size_t>, double> pairs;
    double total = 0.0;
    std::vector<int> on_path(feature_names.size(), 0);
    for (const auto& tree : forest.trees)
        if (!tree.empty()) detail::walk_importance(tree, 0, on_path, singles, pairs, total);
    table.total_decrease = total;
    if (total == 0.0) return table;
    for (std::size_t f = 0; f < singles.size(); ++f)
        table.entries.push_back({feature_names[f], singles[f] / total, false});
    for (const auto& [pair, decrease] : pairs)
        if (decrease > 0.0)
            table.entries.push_back(
                {feature_names[pair.first] + "*" + feature_names[pair.second], decrease / total,
                 true});
    std::sort(table.entries.begin(), table.entries.end(),
              [](const ImportanceEntry& a, const ImportanceEntry& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.term < b.term;
              });
    return table;
}

inline json forest_to_json(const Forest& forest) {
    json doc;
    doc["seed"] = forest.seed;
    json trees = json::array();
    for (const auto& t : forest.trees) trees.push_back(tree_to_json(t));
    doc["trees"] = std::move(trees);
    return doc;
}

inline Forest forest_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("trees") || !doc["trees"].is_array())
        throw FormatError("forest document needs a 'trees' array");
    Forest forest;
    forest.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& jt : doc["trees"]) forest.trees.push_back(tree_from_json(jt));
    return forest;
}

inline json importance_to_json(const ImportanceTable& table) {
    json doc;
    doc["total_decrease"] = table.total_decrease;
    json entries = json::array();
    for (const auto& e : table.entries) {
        json je;
        je["term"] = e.term;
        je["score"] = e.score;
        je["is_pair"] = e.is_pair;
        entries.push_back(std::move(je));
    }
    doc["terms"] = std::move(entries);
    return doc;
}

inline ImportanceTable importance_from_json(const json& doc) {
    ImportanceTable table;
    table.total_decrease = doc.value("total_decrease", 0.0);
    if (doc.contains("terms"))
        for (const auto& je : doc["terms"])
            table.entries.push_back({je["term"].get<std::string>(), je["score"].get<double>(),
                                     je.value("is_pair", false)});
    return table;
}

} // namespace perfluence
