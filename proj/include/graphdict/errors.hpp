#pragma once

#include <stdexcept>
#include <string>

namespace graphdict {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    DisconnectedGraph,
    DisconnectedAfterRetries,
    CoincidentVertices,
    IsolatedVertex,
    EmptyCandidateSet,
    InfeasibleProblem,
    InfeasibleInit,
    BandOutOfRange,
    Io,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::DisconnectedAfterRetries: return "DisconnectedAfterRetries";
    case ErrorCode::CoincidentVertices: return "CoincidentVertices";
    case ErrorCode::IsolatedVertex: return "IsolatedVertex";
    case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::InfeasibleProblem: return "InfeasibleProblem";
    case ErrorCode::InfeasibleInit: return "InfeasibleInit";
    case ErrorCode::BandOutOfRange: return "BandOutOfRange";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

// All library failures surface as this exception; `code()` lets callers
// (the CLI in particular) map failures to exit statuses.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

inline void require_dims(bool cond, const std::string& what) {
    if (!cond) throw Error(ErrorCode::DimensionMismatch, what);
}

} // namespace detail
} // namespace graphdict
