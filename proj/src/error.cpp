#include "geocal/error.hpp"

namespace geocal {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidProbability: return "InvalidProbability";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::BoundaryPoint: return "BoundaryPoint";
        case ErrorKind::NumericalUnderflow: return "NumericalUnderflow";
        case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorKind::DegenerateLabels: return "DegenerateLabels";
        case ErrorKind::NoFeasibleThreshold: return "NoFeasibleThreshold";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::UndefinedAUC: return "UndefinedAUC";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace geocal
