#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bergman {

enum class ErrorKind {
    // validation
    NonPositiveCurvature,
    DomainExceeded,
    NonNegativeSlope,
    BadParams,
    RegimeTooSmall,
    BadThresholds,
    PreconditionViolated,
    EmptySubspace,
    InvalidConfig,
    Unsupported,
    // numerical
    NoDecayCertificate,
    ToleranceNotMet,
    NoConvergence,
    TruncationNotConverged,
    NoCrossing,
    RatioUnderflow,
    NotPositiveDefinite,
};

std::string_view to_string(ErrorKind kind);

/// True for failures of a numerical procedure, as opposed to bad input.
bool is_numerical(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace bergman
