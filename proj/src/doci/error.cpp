#include "doci/error.hpp"

namespace doci {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DenominatorTooSmall: return "DenominatorTooSmall";
        case ErrorCode::EmptyRoi: return "EmptyRoi";
        case ErrorCode::SingularCovariance: return "SingularCovariance";
        case ErrorCode::MissingClass: return "MissingClass";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::TruncatedPayload: return "TruncatedPayload";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
        case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Conflict: return "Conflict";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::Undefined: return "Undefined";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

}  // namespace doci
