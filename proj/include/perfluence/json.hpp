#pragma once

#include <json.hpp>

namespace perfluence {

// ordered_json keeps insertion order, so serialized documents are
// byte-identical across runs.
using json = nlohmann::ordered_json;

} // namespace perfluence
