#pragma once

#include <stdexcept>
#include <string>

namespace anisoheat {

enum class ErrorCode {
    EmptyMeasure,
    NonUnitDirection,
    InvalidAlpha,
    InvalidArgument,
    NonpositiveRadius,
    QuadratureNonconvergence,
    NotClosedForm,
    DegenerateKernel,
    AliasingRisk,
    NonconvergentLimit,
    SingularityMisdeclared,
    TailNotConverged,
    MarchingInstability,
    InadmissibleExponents,
    UnboundedRatio,
    ConfigInvalid,
    CacheCorrupt,
    IoFailure,
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; callers switch on `code()`.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace anisoheat
