#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace geocal {

enum class ErrorKind {
    InvalidProbability,
    DimensionMismatch,
    IndexOutOfRange,
    BoundaryPoint,
    NumericalUnderflow,
    NotPositiveDefinite,
    DegenerateLabels,
    NoFeasibleThreshold,
    InvalidArgument,
    EmptyDataset,
    InsufficientData,
    UndefinedAUC,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Message is a literal so the success path allocates nothing.
inline void require(bool condition, ErrorKind kind, const char* message) {
    if (!condition) throw Error(kind, message);
}

}  // namespace geocal
