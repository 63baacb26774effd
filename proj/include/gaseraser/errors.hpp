#pragma once

#include <stdexcept>
#include <string>

namespace gaseraser {

enum class ErrorCode {
    NonStochasticRow,
    NegativeWeight,
    NonFiniteValue,
    IndexOutOfRange,
    DimensionOutOfRange,
    DimensionMismatch,
    ShapeMismatch,
    InvalidP,
    InvalidParams,
    EmptyInput,
    BadMagic,
    VersionMismatch,
    TruncatedPayload,
    IoFailure,
    BadConfig,
};

const char * error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string & message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string & message) {
    throw Error(code, message);
}

} // namespace gaseraser
