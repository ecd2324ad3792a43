#include "varcov/error.hpp"

namespace varcov {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::NumericalFailure: return "NumericalFailure";
        case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::InvalidRank: return "InvalidRank";
        case ErrorKind::SingularEstimate: return "SingularEstimate";
        case ErrorKind::RankDeficientDesign: return "RankDeficientDesign";
        case ErrorKind::NonCausalModel: return "NonCausalModel";
        case ErrorKind::InvalidOrder: return "InvalidOrder";
        case ErrorKind::InvalidCase: return "InvalidCase";
        case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

}  // namespace varcov
