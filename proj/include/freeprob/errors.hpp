#pragma once

#include <stdexcept>
#include <string>

namespace freeprob {

/// Structurally invalid input: malformed partitions, ground-set mismatches,
/// unknown letters, bad weights, out-of-domain arguments.
struct invalid_input : std::invalid_argument {
    explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

/// Request exceeds a deliberate resource bound (enumeration caps, truncation
/// orders beyond what a functional supports).
struct resource_limit : std::runtime_error {
    explicit resource_limit(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric routine failed to meet its contract (bracket not found, residual
/// too large, non-convergence).
struct numeric_failure : std::runtime_error {
    explicit numeric_failure(const std::string& what) : std::runtime_error(what) {}
};

} // namespace freeprob
