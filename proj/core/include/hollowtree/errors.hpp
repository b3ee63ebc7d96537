#pragma once

#include <stdexcept>
#include <string>

namespace hollowtree {

// Malformed structural input: bad node labels, duplicate edges, dimension
// mismatches, unreadable or ill-formed files.  CLI maps this to exit code 2.
struct input_error : std::runtime_error {
    explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// The mathematics rejects the request: disconnected graph where a
// decomposition is needed, zero cells or margins, infeasible correlations,
// matrices outside the positive definite cone, missing roots.  Exit code 3.
struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// An iterative routine exhausted its iteration budget.  Exit code 4.
struct convergence_error : std::runtime_error {
    explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hollowtree
