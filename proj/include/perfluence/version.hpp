#pragma once

namespace perfluence {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever an on-disk schema changes shape.
inline constexpr int kFormatVersion = 1;

} // namespace perfluence
