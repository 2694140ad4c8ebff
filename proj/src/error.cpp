#include "conetest/error.hpp"

namespace conetest {

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::ZeroRow: return "ZeroRow";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::FamilyMismatch: return "FamilyMismatch";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::AlphaOverflow: return "AlphaOverflow";
    case ErrorCode::NonPositiveVarianceEstimate: return "NonPositiveVarianceEstimate";
    case ErrorCode::UnsupportedFamily: return "UnsupportedFamily";
    case ErrorCode::MuOutsideNull: return "MuOutsideNull";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UsageError: return "UsageError";
    }
    return "Unknown";
}

} // namespace conetest
