#pragma once

#include <stdexcept>
#include <string>

namespace precoder {

enum class ErrorCode {
    NonSymmetric,
    NonFinite,
    IndexOrder,
    DimensionMismatch,
    NegativePower,
    NegativeEigenvalue,
    NotPSD,
    NotConverged,
    UnsupportedM,
    DegenerateReference,
    InvalidArgument,
    IoError,
};

/// Single exception type for all numerical and validation failures.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

const char* to_string(ErrorCode code);

} // namespace precoder
