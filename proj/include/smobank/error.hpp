#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smobank {

enum class ErrorCode {
    InvalidArgument,
    SingularMatrix,
    EigFailure,
    NotHurwitz,
    BadQ,
    PlacementFailure,
    BadTransform,
    InsufficientGain,
    DegenerateBank,
    HullViolation,
    SingularD2,
    NumericalBlowup,
    Schema,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::EigFailure: return "EigFailure";
    case ErrorCode::NotHurwitz: return "NotHurwitz";
    case ErrorCode::BadQ: return "BadQ";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::BadTransform: return "BadTransform";
    case ErrorCode::InsufficientGain: return "InsufficientGain";
    case ErrorCode::DegenerateBank: return "DegenerateBank";
    case ErrorCode::HullViolation: return "HullViolation";
    case ErrorCode::SingularD2: return "SingularD2";
    case ErrorCode::NumericalBlowup: return "NumericalBlowup";
    case ErrorCode::Schema: return "Schema";
    }
    return "Unknown";
}

// Every failure raised by the library carries a machine-readable code so the
// CLI can map it onto its exit-code contract.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace smobank
