#include "dmapar/error.hpp"

namespace dmapar {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::Parse: return "parse-error";
        case ErrorCode::EmptyTrace: return "empty-trace";
        case ErrorCode::InsufficientData: return "insufficient-data";
        case ErrorCode::Undefined: return "undefined";
        case ErrorCode::InvalidDt: return "invalid-dt";
        case ErrorCode::NoArrivals: return "no-arrivals";
        case ErrorCode::Underflow: return "underflow";
        case ErrorCode::NonNormalizable: return "non-normalizable";
        case ErrorCode::NonErgodic: return "non-ergodic";
        case ErrorCode::TooLarge: return "too-large";
        case ErrorCode::DivergentMgf: return "divergent-mgf";
        case ErrorCode::SingularSystem: return "singular-system";
        case ErrorCode::MissingState: return "missing-state";
        case ErrorCode::NumericDegeneracy: return "numeric-degeneracy";
        case ErrorCode::NotFeedForward: return "not-feed-forward";
        case ErrorCode::MissingEnvelope: return "missing-envelope";
        case ErrorCode::Unstable: return "unstable";
        case ErrorCode::InsufficientSamples: return "insufficient-samples";
        case ErrorCode::Refused: return "refused";
        case ErrorCode::UnknownBaseline: return "unknown-baseline";
        case ErrorCode::Io: return "io-error";
    }
    return "unknown";
}

}  // namespace dmapar
