#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lsd
{

/// Failure categories surfaced by the library. The CLI maps these onto exit codes.
enum class ErrorCode {
    ParseError,
    DegenerateGeometry,
    IndexOutOfRange,
    NonManifold,
    SolverFailure,
    RankDeficientMass,
    DimensionMismatch,
    NonBijective,
    UnderDetermined,
    InsufficientShapes,
    ProviderFailure,
    RequiresCanonical,
    NonOrthonormalF,
    NotFullInformation,
    IllConditioned,
    EmptyRegion,
    UnknownShape,
    PreconditionViolation,
    IoError,
    IntegrityError,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::NonManifold: return "NonManifold";
        case ErrorCode::SolverFailure: return "SolverFailure";
        case ErrorCode::RankDeficientMass: return "RankDeficientMass";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonBijective: return "NonBijective";
        case ErrorCode::UnderDetermined: return "UnderDetermined";
        case ErrorCode::InsufficientShapes: return "InsufficientShapes";
        case ErrorCode::ProviderFailure: return "ProviderFailure";
        case ErrorCode::RequiresCanonical: return "RequiresCanonical";
        case ErrorCode::NonOrthonormalF: return "NonOrthonormalF";
        case ErrorCode::NotFullInformation: return "NotFullInformation";
        case ErrorCode::IllConditioned: return "IllConditioned";
        case ErrorCode::EmptyRegion: return "EmptyRegion";
        case ErrorCode::UnknownShape: return "UnknownShape";
        case ErrorCode::PreconditionViolation: return "PreconditionViolation";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::IntegrityError: return "IntegrityError";
    }
    return "Unknown";
}

/** @brief Library exception carrying a machine-readable code */
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_{code}
    {
    }

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, ErrorCode code, const std::string& msg)
{
    if (!cond) {
        fail(code, msg);
    }
}

}  // namespace lsd
