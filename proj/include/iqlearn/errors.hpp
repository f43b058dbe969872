#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace iqlearn {

/// Malformed model input: non-stochastic rows, shape mismatches, out-of-range
/// parameters, or inconsistent demonstration data.
struct ModelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// An iterative solver diverged or produced non-finite values.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A constraint set leaves at least one state with no admissible action.
/// `states` lists every offending state index.
struct InfeasibleConstraintError : std::runtime_error {
    std::vector<int> states;

    InfeasibleConstraintError(const std::string& what, std::vector<int> offending)
        : std::runtime_error(what), states(std::move(offending)) {}
};

/// A serialized document does not match the expected schema or version.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace iqlearn
