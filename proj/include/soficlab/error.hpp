#pragma once

#include <stdexcept>
#include <string>

namespace soficlab {

/// Machine-readable error classes. The numeric values double as CLI exit codes.
enum class ErrorCode : int {
    invalid_argument = 2,
    schema = 3,
    cap_exceeded = 4,
    budget_exceeded = 5,
    no_safe_symbol = 6,
    no_consistent_color = 7,
    wrong_builder = 8,
    inconsistent_pins = 9,
    ball_mismatch = 10,
    empty_fiber = 11,
    oracle = 12,
    type_mismatch = 13,
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "InvalidArgument";
        case ErrorCode::schema: return "SchemaError";
        case ErrorCode::cap_exceeded: return "CapExceeded";
        case ErrorCode::budget_exceeded: return "BudgetExceeded";
        case ErrorCode::no_safe_symbol: return "NoSafeSymbol";
        case ErrorCode::no_consistent_color: return "NoConsistentColor";
        case ErrorCode::wrong_builder: return "WrongBuilder";
        case ErrorCode::inconsistent_pins: return "InconsistentPins";
        case ErrorCode::ball_mismatch: return "BallMismatch";
        case ErrorCode::empty_fiber: return "EmptyFiber";
        case ErrorCode::oracle: return "OracleError";
        case ErrorCode::type_mismatch: return "TypeMismatch";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

} // namespace soficlab
