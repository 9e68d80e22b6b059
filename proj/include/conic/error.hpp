#pragma once

#include <stdexcept>
#include <string>

namespace conic {

enum class ErrorCode {
    InvalidInput,
    ShapeMismatch,
    IndexOutOfRange,
    NotPointed,
    NotIrreducible,
    DegenerateCone,
    Result1Violated,
    CliqueExplosion,
    NegativeCoefficient,
    InfeasibleCertificate,
    DomainError,
    EmptyCliqueSet,
    SupportViolation,
    NonPositiveDenominator,
    SingularBasis,
    SingularMarginal,
    InvalidSpec,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-readable code; all library failures throw this.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NotPointed: return "NotPointed";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::DegenerateCone: return "DegenerateCone";
    case ErrorCode::Result1Violated: return "Result1Violated";
    case ErrorCode::CliqueExplosion: return "CliqueExplosion";
    case ErrorCode::NegativeCoefficient: return "NegativeCoefficient";
    case ErrorCode::InfeasibleCertificate: return "InfeasibleCertificate";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::EmptyCliqueSet: return "EmptyCliqueSet";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::NonPositiveDenominator: return "NonPositiveDenominator";
    case ErrorCode::SingularBasis: return "SingularBasis";
    case ErrorCode::SingularMarginal: return "SingularMarginal";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    }
    return "Unknown";
}

} // namespace conic
