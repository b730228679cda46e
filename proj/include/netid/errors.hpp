#pragma once

#include <stdexcept>
#include <string>

namespace netid {

enum class ErrorCode {
    DimensionMismatch,
    DomainError,          // bad argument value (Ts <= 0, index out of range, ...)
    SingularMatrix,
    UnstableModel,
    StructureViolation,   // required symmetry / diagonality / row sums not met
    InsufficientExcitation,
    IdentifiabilityFailure,
    CheckFailure,         // a pre-run check (informativity / identifiability) failed
    ConfigError,
};

/// Library-wide exception carrying a machine-readable code next to the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

} // namespace netid
