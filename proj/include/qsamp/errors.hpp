#pragma once

#include <stdexcept>
#include <string>

namespace qsamp {

// Bad arguments / unsupported combinations (CLI exit code 1).
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent data: parse failures, checksum mismatches,
// degenerate geometry, diverged training (CLI exit code 2).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace qsamp
