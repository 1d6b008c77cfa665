#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perfluence/forest.hpp"

namespace perfluence {

struct MapeResult {
    std::optional<double> value;  // unset when every row had a zero actual
    std::size_t used = 0;
    std::size_t dead = 0;  // rows excluded because the method never ran there
};

/// Mean absolute percentage error of a predictor against measured rows.
/// Rows with a zero actual are excluded and counted separately.
template <typename Predictor>
MapeResult mape(Predictor&& predict, const MethodDataset& test) {
    MapeResult out;
    double acc = 0.0;
    for (const auto& r : test.rows) {
        if (r.time_ns == 0.0) {
            ++out.dead;
            continue;
        }
        acc += std::abs((r.time_ns - predict(r.features)) / r.time_ns);
        ++out.used;
    }
    if (out.used > 0) out.value = 100.0 * acc / static_cast<double>(out.used);
    return out;
}

/// A learned per-method predictor with its evaluation record. The tree is
/// always present; a forest is attached when importance extraction is on.
struct PerfModel {
    std::string method;
    RegressionTree tree;
    std::optional<Forest> forest;
    MapeResult train_mape;
    MapeResult test_mape;
    double abs_perf = 0.0;  // mean time over the learning set, ns
    double rel_perf = 0.0;  // mean share of the per-configuration total
    std::optional<ImportanceTable> importance_table;

    double predict(const FeatureVector& x) const {
        return forest ? forest->predict(x) : tree.predict(x);
    }
};

inline json mape_to_json(const MapeResult& m) {
    json doc;
    doc["value"] = m.value ? json(*m.value) : json(nullptr);
    doc["rows_used"] = m.used;
    doc["rows_dead"] = m.dead;
    return doc;
}

inline MapeResult mape_from_json(const json& doc) {
    MapeResult m;
    if (doc.contains("value") && doc["value"].is_number()) m.value = doc["value"].get<double>();
    m.used = doc.value("rows_used", std::size_t{0});
    m.dead = doc.value("rows_dead", std::size_t{0});
    return m;
}

inline json perf_model_to_json(const PerfModel& m) {
    json doc;
    doc["method"] = m.method;
    doc["abs_perf_ns"] = m.abs_perf;
    doc["rel_perf"] = m.rel_perf;
    doc["train_mape"] = mape_to_json(m.train_mape);
    doc["test_mape"] = mape_to_json(m.test_mape);
    doc["tree"] = tree_to_json(m.tree);
    if (m.forest) doc["forest"] = forest_to_json(*m.forest);
    if (m.importance_table) doc["importance"] = importance_to_json(*m.importance_table);
    return doc;
}

inline PerfModel perf_model_from_json(const json& doc) {
    PerfModel m;
    m.method = doc.at("method").get<std::string>();
    m.abs_perf = doc.value("abs_perf_ns", 0.0);
    m.rel_perf = doc.value("rel_perf", 0.0);
    if (doc.contains("train_mape")) m.train_mape = mape_from_json(doc["train_mape"]);
    if (doc.contains("test_mape")) m.test_mape = mape_from_json(doc["test_mape"]);
    m.tree = tree_from_json(doc.at("tree"));
    if (doc.contains("forest")) m.forest = forest_from_json(doc["forest"]);
    if (doc.contains("importance")) m.importance_table = importance_from_json(doc["importance"]);
    return m;
}

inline json models_to_json(const std::vector<PerfModel>& models) {
    json doc;
    doc["format_version"] = kFormatVersion;
    json arr = json::array();
    for (const auto& m : models) arr.push_back(perf_model_to_json(m));
    doc["methods"] = std::move(arr);
    return doc;
}

inline std::vector<PerfModel> models_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("methods") || !doc["methods"].is_array())
        throw FormatError("model bundle needs a 'methods' array");
    std::vector<PerfModel> out;
    for (const auto& jm : doc["methods"]) out.push_back(perf_model_from_json(jm));
    return out;
}

} // namespace perfluence
