#pragma once

#include <stdexcept>
#include <string>

namespace doci {

// Values are shared with the C status codes in <doci/doci.h>.
enum class ErrorCode : int {
    InvalidArgument = 1,
    ShapeMismatch = 2,
    DenominatorTooSmall = 3,
    EmptyRoi = 4,
    SingularCovariance = 5,
    MissingClass = 6,
    BadMagic = 7,
    TruncatedPayload = 8,
    UnsupportedVersion = 9,
    UnsupportedDtype = 10,
    ChecksumMismatch = 11,
    NonFinite = 12,
    Io = 13,
    Conflict = 14,
    NotFound = 15,
    Undefined = 16,
    Internal = 17,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw Error(ErrorCode::InvalidArgument, message);
    }
}

}  // namespace doci
