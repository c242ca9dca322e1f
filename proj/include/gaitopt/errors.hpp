#pragma once

#include <stdexcept>
#include <string>

namespace gaitopt {

/// Invalid argument values: parameters outside the search box, malformed
/// hyperparameters, bad configuration.
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Covariance matrix could not be factorized even after jitter escalation.
struct ConditioningError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// ask/tell called out of order, or a tell that does not match the pending
/// proposal.
struct ProtocolError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Evaluation budget exhausted.
struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// State file missing, corrupt, locked, or incompatible.
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Too few samples in a tracking trace to fit the movement model.
struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Movement-model fit produced a singular or meaningless solution.
struct DegenerateFitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A grid cell could not be filled from its neighbors.
struct FillError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input data (CSV, config, state files).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace gaitopt
