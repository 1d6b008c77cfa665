#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "perfluence/constraint.hpp"
#include "perfluence/errors.hpp"
#include "perfluence/hash.hpp"
#include "perfluence/json.hpp"
#include "perfluence/version.hpp"

namespace perfluence {

enum class OptionKind { Binary, Numeric };

/// One configuration option. Binary options take values 0/1; numeric options
/// take values from an explicit sorted domain.
struct OptionDef {
    std::string name;
    OptionKind kind = OptionKind::Binary;
    std::vector<double> domain;   // numeric only; strictly ascending
    double default_value = 0.0;   // must lie in the domain

    bool value_in_domain(double v) const {
        if (kind == OptionKind::Binary) return v == 0.0 || v == 1.0;
        return std::find(domain.begin(), domain.end(), v) != domain.end();
    }
};

/// Partial or total assignment by option name. Binary values are 0/1.
using Assignment = std::map<std::string, double>;

/// A complete, valid assignment. Values are aligned with the space's option
/// order (binary as 0/1, numeric as the raw domain value); `id` is a stable
/// 64-bit hash of the canonical assignment text and serves as the join key
/// across sample sets and trace files.
struct Configuration {
    std::vector<double> values;
    std::uint64_t id = 0;

    bool operator==(const Configuration& o) const { return values == o.values; }
};

/// Learning-input encoding: one real per option, in option order.
using FeatureVector = std::vector<double>;

class ConfigurationSpace {
  public:
    ConfigurationSpace() = default;

    ConfigurationSpace(std::vector<OptionDef> options,
                       const std::vector<std::string>& constraint_sources)
        : options_(std::move(options)) {
        std::vector<std::string> binary_names;
        for (std::size_t i = 0; i < options_.size(); ++i) {
            const OptionDef& o = options_[i];
            if (o.name.empty()) throw FormatError("option name must be non-empty");
            if (index_.count(o.name))
                throw FormatError("duplicate option name '" + o.name + "'");
            index_[o.name] = i;
            if (o.kind == OptionKind::Numeric) {
                if (o.domain.empty())
                    throw FormatError("numeric option '" + o.name + "' has an empty domain");
                for (std::size_t k = 1; k < o.domain.size(); ++k)
                    if (!(o.domain[k - 1] < o.domain[k]))
                        throw FormatError("domain of '" + o.name +
                                          "' must be strictly ascending");
            }
            if (!o.value_in_domain(o.default_value))
                throw FormatError("default of '" + o.name + "' is outside its domain");
            if (o.kind == OptionKind::Binary) binary_names.push_back(o.name);
        }
        for (std::size_t ci = 0; ci < constraint_sources.size(); ++ci) {
            try {
                constraints_.push_back(parse_constraint(constraint_sources[ci], &binary_names));
            } catch (const FormatError& e) {
                throw FormatError("constraint " + std::to_string(ci + 1) + ": " + e.what());
            }
        }
    }

    const std::vector<OptionDef>& options() const { return options_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    std::size_t size() const { return options_.size(); }

    std::size_t option_index(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw DataError("unknown option '" + name + "'");
        return it->second;
    }

    const OptionDef* find_option(const std::string& name) const {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : &options_[it->second];
    }

    /// Number of candidate assignments (product of domain sizes), capped so
    /// huge spaces do not overflow.
    std::uint64_t candidate_count() const {
        std::uint64_t n = 1;
        const std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
        for (const auto& o : options_) {
            std::uint64_t d = o.kind == OptionKind::Binary ? 2 : o.domain.size();
            if (n > cap / d) return cap;
            n *= d;
        }
        return n;
    }

  private:
    std::vector<OptionDef> options_;
    std::vector<Constraint> constraints_;
    std::map<std::string, std::size_t> index_;
};

inline std::uint64_t config_id(const ConfigurationSpace& space,
                               const std::vector<double>& values) {
    std::uint64_t h = kFnvOffset;
    for (std::size_t i = 0; i < space.size(); ++i) {
        h = fnv1a64(space.options()[i].name, h);
        h = fnv1a64("=", h);
        h = fnv1a64(canonical_number(values[i]), h);
        h = fnv1a64(";", h);
    }
    return h;
}

namespace detail {

inline Tribool constraints_state(const ConfigurationSpace& space,
                                 const std::vector<std::optional<double>>& partial,
                                 const Constraint** first_violated = nullptr) {
    auto lookup = [&](const std::string& name) -> std::optional<bool> {
        auto v = partial[space.option_index(name)];
        if (!v) return std::nullopt;
        return *v != 0.0;
    };
    Tribool all = Tribool::True;
    for (const auto& c : space.constraints()) {
        Tribool s = eval_partial(c.formula, lookup);
        if (s == Tribool::False) {
            if (first_violated) *first_violated = &c;
            return Tribool::False;
        }
        if (s == Tribool::Unknown) all = Tribool::Unknown;
    }
    return all;
}

} // namespace detail

/// True iff the assignment is total, every value lies in its option's domain,
/// and all constraints hold. Undeclared option names are an error.
inline bool validate(const ConfigurationSpace& space, const Assignment& a) {
    for (const auto& [name, value] : a) {
        const OptionDef* opt = space.find_option(name);
        if (!opt) throw DataError("unknown option '" + name + "'");
        if (!opt->value_in_domain(value)) return false;
    }
    std::vector<std::optional<double>> partial(space.size());
    for (const auto& [name, value] : a) partial[space.option_index(name)] = value;
    for (const auto& v : partial)
        if (!v) return false;
    return detail::constraints_state(space, partial) == Tribool::True;
}

inline Assignment to_assignment(const ConfigurationSpace& space, const Configuration& cfg) {
    Assignment a;
    for (std::size_t i = 0; i < space.size(); ++i) a[space.options()[i].name] = cfg.values[i];
    return a;
}

inline bool validate(const ConfigurationSpace& space, const Configuration& cfg) {
    if (cfg.values.size() != space.size()) return false;
    return validate(space, to_assignment(space, cfg));
}

/// Builds a Configuration from aligned values, checking validity.
inline Configuration make_configuration(const ConfigurationSpace& space,
                                        std::vector<double> values) {
    if (values.size() != space.size())
        throw DataError("assignment has " + std::to_string(values.size()) + " values, space has " +
                        std::to_string(space.size()) + " options");
    Configuration cfg;
    cfg.values = std::move(values);
    if (!validate(space, cfg)) throw DataError("assignment is not a valid configuration");
    cfg.id = config_id(space, cfg.values);
    return cfg;
}

inline Configuration make_configuration(const ConfigurationSpace& space, const Assignment& a) {
    std::vector<double> values(space.size());
    std::vector<bool> seen(space.size(), false);
    for (const auto& [name, value] : a) {
        std::size_t i = space.option_index(name);
        values[i] = value;
        seen[i] = true;
    }
    for (std::size_t i = 0; i < space.size(); ++i)
        if (!seen[i])
            throw DataError("assignment is missing option '" + space.options()[i].name + "'");
    return make_configuration(space, std::move(values));
}

/// All valid configurations in lexicographic order over the option order
/// (binary: false before true, numeric: domain order). Errors out when the
/// candidate cross product exceeds `limit`.
inline std::vector<Configuration> enumerate_valid(const ConfigurationSpace& space,
                                                  std::uint64_t limit = 1u << 16) {
    const std::uint64_t candidates = space.candidate_count();
    if (candidates > limit)
        throw DegenerateError("space has " + std::to_string(candidates) +
                              " candidate assignments, enumeration limit is " +
                              std::to_string(limit));
    const std::size_t n = space.size();
    std::vector<std::size_t> radix(n), odo(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        radix[i] = space.options()[i].kind == OptionKind::Binary ? 2
                                                                 : space.options()[i].domain.size();
    std::vector<Configuration> out;
    std::vector<std::optional<double>> partial(n);
    for (std::uint64_t step = 0; step < candidates; ++step) {
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) {
            const OptionDef& o = space.options()[i];
            values[i] = o.kind == OptionKind::Binary ? static_cast<double>(odo[i])
                                                     : o.domain[odo[i]];
            partial[i] = values[i];
        }
        if (detail::constraints_state(space, partial) == Tribool::True) {
            Configuration cfg;
            cfg.values = std::move(values);
            cfg.id = config_id(space, cfg.values);
            out.push_back(std::move(cfg));
        }
        // odometer increment, last option fastest
        for (std::size_t i = n; i-- > 0;) {
            if (++odo[i] < radix[i]) break;
            odo[i] = 0;
        }
        if (n == 0) break;
    }
    return out;
}

/// Deterministically completes `required` into a valid configuration by
/// backtracking over the option order; binary options try false before true,
/// numeric options try their default first, then the rest of the domain.
inline Configuration find_valid(const ConfigurationSpace& space, const Assignment& required) {
    const std::size_t n = space.size();
    std::vector<std::optional<double>> partial(n);
    for (const auto& [name, value] : required) {
        const OptionDef* opt = space.find_option(name);
        if (!opt) throw DataError("unknown option '" + name + "'");
        if (!opt->value_in_domain(value))
            throw DataError("required value " + canonical_number(value) + " for '" + name +
                            "' is outside its domain");
        partial[space.option_index(name)] = value;
    }

    // Candidate values per option, in decision order.
    std::vector<std::vector<double>> candidates(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (partial[i]) {
            candidates[i] = {*partial[i]};
            continue;
        }
        const OptionDef& o = space.options()[i];
        if (o.kind == OptionKind::Binary) {
            candidates[i] = {0.0, 1.0};
        } else {
            candidates[i].push_back(o.default_value);
            for (double v : o.domain)
                if (v != o.default_value) candidates[i].push_back(v);
        }
    }

    std::set<std::string> conflicts;
    std::vector<std::optional<double>> work(n);
    std::function<bool(std::size_t)> assign = [&](std::size_t i) -> bool {
        const Constraint* violated = nullptr;
        if (detail::constraints_state(space, work, &violated) == Tribool::False) {
            conflicts.insert(violated->source);
            return false;
        }
        if (i == n) return detail::constraints_state(space, work) == Tribool::True;
        for (double v : candidates[i]) {
            work[i] = v;
            if (assign(i + 1)) return true;
        }
        work[i] = std::nullopt;
        return false;
    };
    if (!assign(0))
        throw UnsatError("no valid configuration extends the request",
                         std::vector<std::string>(conflicts.begin(), conflicts.end()));

    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = *work[i];
    Configuration cfg;
    cfg.values = std::move(values);
    cfg.id = config_id(space, cfg.values);
    return cfg;
}

inline FeatureVector encode(const ConfigurationSpace& space, const Configuration& cfg) {
    if (cfg.values.size() != space.size())
        throw DataError("configuration does not match space");
    return cfg.values;
}

inline Configuration decode(const ConfigurationSpace& space, const FeatureVector& x) {
    return make_configuration(space, std::vector<double>(x));
}

// --- space file (JSON) ---

inline json space_to_json(const ConfigurationSpace& space) {
    json doc;
    doc["format_version"] = kFormatVersion;
    json opts = json::array();
    for (const auto& o : space.options()) {
        json jo;
        jo["name"] = o.name;
        jo["kind"] = o.kind == OptionKind::Binary ? "binary" : "numeric";
        if (o.kind == OptionKind::Numeric) {
            jo["values"] = o.domain;
            jo["default"] = o.default_value;
        } else {
            jo["default"] = o.default_value != 0.0;
        }
        opts.push_back(std::move(jo));
    }
    doc["options"] = std::move(opts);
    json cons = json::array();
    for (const auto& c : space.constraints()) cons.push_back(c.source);
    doc["constraints"] = std::move(cons);
    return doc;
}

inline ConfigurationSpace space_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("options") || !doc["options"].is_array())
        throw FormatError("space file must be an object with an 'options' array");
    std::vector<OptionDef> options;
    for (const auto& jo : doc["options"]) {
        OptionDef o;
        if (!jo.contains("name") || !jo["name"].is_string())
            throw FormatError("every option needs a string 'name'");
        o.name = jo["name"].get<std::string>();
        std::string kind = jo.value("kind", "binary");
        if (kind == "binary") {
            o.kind = OptionKind::Binary;
            o.default_value = jo.value("default", false) ? 1.0 : 0.0;
        } else if (kind == "numeric") {
            o.kind = OptionKind::Numeric;
            if (jo.contains("values")) {
                for (const auto& v : jo["values"]) {
                    if (!v.is_number())
                        throw FormatError("domain of '" + o.name + "' must be numeric");
                    o.domain.push_back(v.get<double>());
                }
            } else if (jo.contains("range")) {
                const auto& r = jo["range"];
                if (!r.contains("min") || !r.contains("max") || !r.contains("step"))
                    throw FormatError("range of '" + o.name + "' needs min, max, step");
                double lo = r["min"].get<double>(), hi = r["max"].get<double>(),
                       step = r["step"].get<double>();
                if (step <= 0) throw FormatError("range step of '" + o.name + "' must be > 0");
                for (double v = lo; v <= hi + step * 1e-9; v += step) o.domain.push_back(v);
            } else {
                throw FormatError("numeric option '" + o.name + "' needs 'values' or 'range'");
            }
            if (!jo.contains("default"))
                throw FormatError("numeric option '" + o.name + "' needs a 'default'");
            o.default_value = jo["default"].get<double>();
        } else {
            throw FormatError("option '" + o.name + "' has unknown kind '" + kind + "'");
        }
        options.push_back(std::move(o));
    }
    std::vector<std::string> constraints;
    if (doc.contains("constraints")) {
        for (const auto& c : doc["constraints"]) {
            if (!c.is_string()) throw FormatError("constraints must be strings");
            constraints.push_back(c.get<std::string>());
        }
    }
    return ConfigurationSpace(std::move(options), constraints);
}

inline json assignment_to_json(const ConfigurationSpace& space, const Configuration& cfg) {
    json a;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const OptionDef& o = space.options()[i];
        if (o.kind == OptionKind::Binary)
            a[o.name] = cfg.values[i] != 0.0;
        else
            a[o.name] = cfg.values[i];
    }
    return a;
}

inline Configuration configuration_from_json(const ConfigurationSpace& space, const json& a) {
    Assignment asg;
    for (auto it = a.begin(); it != a.end(); ++it) {
        if (it.value().is_boolean())
            asg[it.key()] = it.value().get<bool>() ? 1.0 : 0.0;
        else if (it.value().is_number())
            asg[it.key()] = it.value().get<double>();
        else
            throw FormatError("assignment value for '" + it.key() + "' must be bool or number");
    }
    return make_configuration(space, asg);
}

} // namespace perfluence
