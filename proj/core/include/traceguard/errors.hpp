#pragma once

#include <stdexcept>
#include <string>

namespace traceguard {

struct TraceguardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// trace parsing / validation
struct MalformedSyntax : TraceguardError {
    using TraceguardError::TraceguardError;
};
struct InvariantViolation : TraceguardError {
    InvariantViolation(const std::string& field, const std::string& reason)
        : TraceguardError("invariant violation on '" + field + "': " + reason), field(field), reason(reason) {}
    std::string field;
    std::string reason;
};
struct UnknownModelId : TraceguardError {
    explicit UnknownModelId(const std::string& id) : TraceguardError("unknown model_id: " + id), model_id(id) {}
    std::string model_id;
};

// generation
struct TargetsBelowBenignMean : TraceguardError {
    using TraceguardError::TraceguardError;
};
struct InsufficientBenignStats : TraceguardError {
    using TraceguardError::TraceguardError;
};
struct ValidationExhausted : TraceguardError {
    using TraceguardError::TraceguardError;
};

// features / models
struct InsufficientData : TraceguardError {
    using TraceguardError::TraceguardError;
};
struct DimensionMismatch : TraceguardError {
    using TraceguardError::TraceguardError;
};
struct DegenerateLabels : TraceguardError {
    using TraceguardError::TraceguardError;
};
struct NonFiniteInput : TraceguardError {
    using TraceguardError::TraceguardError;
};
struct MalformedModel : TraceguardError {
    using TraceguardError::TraceguardError;
};
struct VersionMismatch : TraceguardError {
    using TraceguardError::TraceguardError;
};

// harness
struct InsufficientClassSamples : TraceguardError {
    using TraceguardError::TraceguardError;
};
struct InsufficientModels : TraceguardError {
    using TraceguardError::TraceguardError;
};

struct IoFailure : TraceguardError {
    using TraceguardError::TraceguardError;
};

}  // namespace traceguard
