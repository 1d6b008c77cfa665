#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "perfluence/json.hpp"
#include "perfluence/rng.hpp"
#include "perfluence/traces.hpp"

namespace perfluence {

struct TreeHyperparams {
    std::size_t min_samples_leaf = 2;
    std::size_t max_depth = 0;  // 0 means unlimited
    double min_impurity_decrease = 0.0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // mean target of the node's training rows
    std::uint64_t count = 0;
    double sse = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // node 0 is the root; rows with x[f] <= threshold go left

    bool empty() const { return nodes.empty(); }

    double predict(const FeatureVector& x) const {
        if (nodes.empty()) throw DataError("predict on an untrained tree");
        int i = 0;
        while (nodes[i].feature >= 0)
            i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold
                    ? nodes[i].left
                    : nodes[i].right;
        return nodes[i].value;
    }
};

namespace detail {

inline double sse_of(double sum, double sum_sq, double n) {
    const double s = sum_sq - sum * sum / n;
    return s > 0.0 ? s : 0.0;
}

/// Greedy SSE-minimizing builder. When `features_per_node` is non-zero, each
/// node considers only that many randomly drawn features (forest mode).
class TreeBuilder {
  public:
    TreeBuilder(const std::vector<const FeatureVector*>& X, const std::vector<double>& y,
                TreeHyperparams hp, std::size_t n_features, std::size_t features_per_node = 0,
                SplitMix64* rng = nullptr)
        : X_(X), y_(y), hp_(hp), n_features_(n_features),
          features_per_node_(features_per_node), rng_(rng) {}

    RegressionTree build() {
        std::vector<std::size_t> idx(y_.size());
        std::iota(idx.begin(), idx.end(), 0);
        RegressionTree tree;
        build_node(tree, idx, 0);
        return tree;
    }

  private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double decrease = -1.0;
    };

    int build_node(RegressionTree& tree, std::vector<std::size_t>& idx, std::size_t depth) {
        const double n = static_cast<double>(idx.size());
        double sum = 0.0, sum_sq = 0.0;
        double lo = y_[idx[0]], hi = y_[idx[0]];
        for (std::size_t i : idx) {
            sum += y_[i];
            sum_sq += y_[i] * y_[i];
            lo = std::min(lo, y_[i]);
            hi = std::max(hi, y_[i]);
        }
        const int node_id = static_cast<int>(tree.nodes.size());
        TreeNode node;
        node.value = sum / n;
        node.count = idx.size();
        node.sse = sse_of(sum, sum_sq, n);
        tree.nodes.push_back(node);

        const bool at_depth_limit = hp_.max_depth != 0 && depth >= hp_.max_depth;
        const bool pure = lo == hi;
        if (pure || at_depth_limit || idx.size() < 2 * hp_.min_samples_leaf) return node_id;

        const Split best = find_split(idx, node.sse);
        if (best.feature < 0) return node_id;

        std::vector<std::size_t> left, right;
        for (std::size_t i : idx) {
            if ((*X_[i])[static_cast<std::size_t>(best.feature)] <= best.threshold)
                left.push_back(i);
            else
                right.push_back(i);
        }
        idx.clear();
        idx.shrink_to_fit();
        tree.nodes[static_cast<std::size_t>(node_id)].feature = best.feature;
        tree.nodes[static_cast<std::size_t>(node_id)].threshold = best.threshold;
        const int l = build_node(tree, left, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].left = l;
        const int r = build_node(tree, right, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_id)].right = r;
        return node_id;
    }

    std::vector<std::size_t> candidate_features() {
        std::vector<std::size_t> feats(n_features_);
        std::iota(feats.begin(), feats.end(), 0);
        if (features_per_node_ == 0 || features_per_node_ >= n_features_ || !rng_) return feats;
        for (std::size_t i = 0; i < features_per_node_; ++i) {
            const std::size_t j = i + rng_->next_below(n_features_ - i);
            std::swap(feats[i], feats[j]);
        }
        feats.resize(features_per_node_);
        std::sort(feats.begin(), feats.end());  // keep the lower-index tie-break
        return feats;
    }

    Split find_split(const std::vector<std::size_t>& idx, double node_sse) {
        Split best;
        const std::size_t n = idx.size();
        std::vector<std::pair<double, double>> vy(n);  // (feature value, target)
        std::vector<double> pre(n + 1), pre_sq(n + 1);
        for (std::size_t f : candidate_features()) {
            for (std::size_t i = 0; i < n; ++i) vy[i] = {(*X_[idx[i]])[f], y_[idx[i]]};
            std::sort(vy.begin(), vy.end());
            if (vy.front().first == vy.back().first) continue;
            for (std::size_t i = 0; i < n; ++i) {
                pre[i + 1] = pre[i] + vy[i].second;
                pre_sq[i + 1] = pre_sq[i] + vy[i].second * vy[i].second;
            }
            for (std::size_t i = hp_.min_samples_leaf; i + hp_.min_samples_leaf <= n; ++i) {
                const double lo = vy[i - 1].first, hi = vy[i].first;
                if (lo == hi) continue;
                double t = lo + (hi - lo) / 2.0;
                if (!(lo < t && t < hi)) t = lo;  // guard against rounding to the upper value
                const double left_sse = sse_of(pre[i], pre_sq[i], static_cast<double>(i));
                const double right_sse =
                    sse_of(pre[n] - pre[i], pre_sq[n] - pre_sq[i], static_cast<double>(n - i));
                double decrease = node_sse - left_sse - right_sse;
                if (decrease < 0.0) decrease = 0.0;
                if (decrease < hp_.min_impurity_decrease) continue;
                if (decrease > best.decrease) {
                    best.feature = static_cast<int>(f);
                    best.threshold = t;
                    best.decrease = decrease;
                }
            }
        }
        return best;
    }

    const std::vector<const FeatureVector*>& X_;
    const std::vector<double>& y_;
    TreeHyperparams hp_;
    std::size_t n_features_;
    std::size_t features_per_node_;
    SplitMix64* rng_;
};

} // namespace detail

inline RegressionTree fit_cart_rows(const std::vector<const FeatureVector*>& X,
                                    const std::vector<double>& y, std::size_t n_features,
                                    const TreeHyperparams& hp) {
    if (X.empty() || X.size() != y.size()) throw DataError("training needs at least 1 row");
    detail::TreeBuilder builder(X, y, hp, n_features);
    return builder.build();
}

/// Greedy top-down CART on a method's (feature vector, aggregated time)
/// rows. Candidate thresholds are midpoints between consecutive distinct
/// sorted feature values; ties prefer the lower feature index, then the
/// lower threshold.
inline RegressionTree fit_cart(const MethodDataset& dataset, const TreeHyperparams& hp = {}) {
    std::vector<const FeatureVector*> X;
    std::vector<double> y;
    X.reserve(dataset.rows.size());
    y.reserve(dataset.rows.size());
    for (const auto& r : dataset.rows) {
        X.push_back(&r.features);
        y.push_back(r.time_ns);
    }
    const std::size_t d = dataset.rows.empty() ? 0 : dataset.rows.front().features.size();
    return fit_cart_rows(X, y, d, hp);
}

inline json tree_to_json(const RegressionTree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
        json jn;
        if (n.feature >= 0) {
            jn["feature"] = n.feature;
            jn["threshold"] = n.threshold;
            jn["left"] = n.left;
            jn["right"] = n.right;
        }
        jn["value"] = n.value;
        jn["count"] = n.count;
        jn["sse"] = n.sse;
        nodes.push_back(std::move(jn));
    }
    json doc;
    doc["nodes"] = std::move(nodes);
    return doc;
}

inline RegressionTree tree_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array())
        throw FormatError("tree document needs a 'nodes' array");
    RegressionTree tree;
    for (const auto& jn : doc["nodes"]) {
        TreeNode n;
        if (jn.contains("feature")) {
            n.feature = jn["feature"].get<int>();
            n.threshold = jn["threshold"].get<double>();
            n.left = jn["left"].get<int>();
            n.right = jn["right"].get<int>();
        }
        n.value = jn["value"].get<double>();
        n.count = jn.value("count", std::uint64_t{0});
        n.sse = jn.value("sse", 0.0);
        tree.nodes.push_back(n);
    }
    const int size = static_cast<int>(tree.nodes.size());
    for (const auto& n : tree.nodes)
        if (n.feature >= 0 && (n.left < 0 || n.left >= size || n.right < 0 || n.right >= size))
            throw FormatError("tree node has out-of-range children");
    return tree;
}

} // namespace perfluence
