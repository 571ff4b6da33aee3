#include "bergman/error.hpp"

namespace bergman {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonPositiveCurvature: return "NonPositiveCurvature";
        case ErrorKind::DomainExceeded: return "DomainExceeded";
        case ErrorKind::NonNegativeSlope: return "NonNegativeSlope";
        case ErrorKind::BadParams: return "BadParams";
        case ErrorKind::RegimeTooSmall: return "RegimeTooSmall";
        case ErrorKind::BadThresholds: return "BadThresholds";
        case ErrorKind::PreconditionViolated: return "PreconditionViolated";
        case ErrorKind::EmptySubspace: return "EmptySubspace";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::Unsupported: return "Unsupported";
        case ErrorKind::NoDecayCertificate: return "NoDecayCertificate";
        case ErrorKind::ToleranceNotMet: return "ToleranceNotMet";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::TruncationNotConverged: return "TruncationNotConverged";
        case ErrorKind::NoCrossing: return "NoCrossing";
        case ErrorKind::RatioUnderflow: return "RatioUnderflow";
        case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    }
    return "Unknown";
}

bool is_numerical(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NoDecayCertificate:
        case ErrorKind::ToleranceNotMet:
        case ErrorKind::NoConvergence:
        case ErrorKind::TruncationNotConverged:
        case ErrorKind::NoCrossing:
        case ErrorKind::RatioUnderflow:
        case ErrorKind::NotPositiveDefinite:
            return true;
        default:
            return false;
    }
}

}  // namespace bergman
