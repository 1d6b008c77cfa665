#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "perfluence/csvio.hpp"
#include "perfluence/hash.hpp"
#include "perfluence/json.hpp"
#include "perfluence/version.hpp"

namespace perfluence {

/// Reproducibility record for one tool invocation: version, subcommand, the
/// fully resolved parameters, digests of every input file, and the master
/// seed. Deliberately carries no timestamps so identical runs produce
/// identical bytes.
struct RunManifest {
    std::string subcommand;
    json parameters = json::object();
    std::map<std::string, std::string> input_digests;  // path -> 16-hex digest
    std::optional<std::uint64_t> seed;

    void add_input(const std::string& path) {
        input_digests[path] = to_hex16(fnv1a64(read_file(path)));
    }

    json to_json() const {
        json doc;
        doc["tool_version"] = kVersion;
        doc["format_version"] = kFormatVersion;
        doc["subcommand"] = subcommand;
        doc["parameters"] = parameters;
        json inputs = json::object();
        for (const auto& [path, digest] : input_digests) inputs[path] = digest;
        doc["inputs"] = std::move(inputs);
        doc["seed"] = seed ? json(*seed) : json(nullptr);
        return doc;
    }
};

/// JSON outputs embed the manifest; CSV outputs get a sibling
/// `<path>.manifest.json`.
inline void write_json_output(const std::string& path, json doc, const RunManifest& manifest) {
    doc["manifest"] = manifest.to_json();
    write_file(path, doc.dump(2) + "\n");
}

inline void write_sibling_manifest(const std::string& csv_path, const RunManifest& manifest) {
    write_file(csv_path + ".manifest.json", manifest.to_json().dump(2) + "\n");
}

} // namespace perfluence
