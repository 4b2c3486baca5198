#include "anisoheat/errors.hpp"

namespace anisoheat {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyMeasure: return "EmptyMeasure";
        case ErrorCode::NonUnitDirection: return "NonUnitDirection";
        case ErrorCode::InvalidAlpha: return "InvalidAlpha";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NonpositiveRadius: return "NonpositiveRadius";
        case ErrorCode::QuadratureNonconvergence: return "QuadratureNonconvergence";
        case ErrorCode::NotClosedForm: return "NotClosedForm";
        case ErrorCode::DegenerateKernel: return "DegenerateKernel";
        case ErrorCode::AliasingRisk: return "AliasingRisk";
        case ErrorCode::NonconvergentLimit: return "NonconvergentLimit";
        case ErrorCode::SingularityMisdeclared: return "SingularityMisdeclared";
        case ErrorCode::TailNotConverged: return "TailNotConverged";
        case ErrorCode::MarchingInstability: return "MarchingInstability";
        case ErrorCode::InadmissibleExponents: return "InadmissibleExponents";
        case ErrorCode::UnboundedRatio: return "UnboundedRatio";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::CacheCorrupt: return "CacheCorrupt";
        case ErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

}  // namespace anisoheat
