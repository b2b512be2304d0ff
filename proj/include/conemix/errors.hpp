#pragma once

#include <stdexcept>
#include <string>

namespace conemix {

enum class ErrorCode {
    DimensionMismatch,
    InvalidCone,
    InvalidUnit,
    NegativeEntry,
    ColumnSumViolation,
    Unsupported,
    ZeroSpectralRadius,
    NotStronglyConnected,
    NormalizationVanished,
    InitNotInCone,
    NotClassical,
    Schema,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidCone: return "InvalidCone";
        case ErrorCode::InvalidUnit: return "InvalidUnit";
        case ErrorCode::NegativeEntry: return "NegativeEntry";
        case ErrorCode::ColumnSumViolation: return "ColumnSumViolation";
        case ErrorCode::Unsupported: return "Unsupported";
        case ErrorCode::ZeroSpectralRadius: return "ZeroSpectralRadius";
        case ErrorCode::NotStronglyConnected: return "NotStronglyConnected";
        case ErrorCode::NormalizationVanished: return "NormalizationVanished";
        case ErrorCode::InitNotInCone: return "InitNotInCone";
        case ErrorCode::NotClassical: return "NotClassical";
        case ErrorCode::Schema: return "Schema";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code; the
/// message always starts with the code name.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace conemix
