#pragma once

#include <stdexcept>
#include <string>

namespace dmapar {

// Error classes. The CLI maps each to a distinct exit code.
enum class ErrorCode {
    InvalidArgument = 10,
    Parse = 11,
    EmptyTrace = 12,
    InsufficientData = 13,
    Undefined = 14,
    InvalidDt = 15,
    NoArrivals = 16,
    Underflow = 17,
    NonNormalizable = 18,
    NonErgodic = 19,
    TooLarge = 20,
    DivergentMgf = 21,
    SingularSystem = 22,
    MissingState = 23,
    NumericDegeneracy = 24,
    NotFeedForward = 25,
    MissingEnvelope = 26,
    Unstable = 27,
    InsufficientSamples = 28,
    Refused = 29,
    UnknownBaseline = 30,
    Io = 31,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

}  // namespace dmapar
