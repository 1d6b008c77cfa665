#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace perfluence {

/// Base class for all library errors. Subclasses map to CLI exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual ~Error() = default;
    virtual int exit_code() const { return 2; }
};

/// Bad command line or API usage (exit code 1).
struct UsageError : Error {
    explicit UsageError(const std::string& msg) : Error(msg) {}
    int exit_code() const override { return 1; }
};

/// Malformed input file: bad header, non-numeric field, etc. (exit code 2).
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

/// Structurally valid input that violates a contract, e.g. a sampled
/// configuration missing from a trace (exit code 2).
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// No configuration satisfies the constraints together with the request
/// (exit code 3). Carries the constraints that pruned the search.
struct UnsatError : Error {
    UnsatError(const std::string& msg, std::vector<std::string> conflicts)
        : Error(msg), conflicting_constraints(std::move(conflicts)) {}
    int exit_code() const override { return 3; }
    std::vector<std::string> conflicting_constraints;
};

/// Analysis input is degenerate (all-zero series, exhausted space, ...)
/// (exit code 3).
struct DegenerateError : Error {
    explicit DegenerateError(const std::string& msg) : Error(msg) {}
    int exit_code() const override { return 3; }
};

} // namespace perfluence
