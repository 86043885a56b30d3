#pragma once

#include <stdexcept>
#include <string>

namespace stockcast {

enum class ErrorKind {
    EmptyInput,
    DuplicateDate,
    InvalidBar,
    SeriesTooShort,
    SingularRegression,
    SingularDesignMatrix,
    ZeroVariance,
    ShapeMismatch,
    NonFiniteValue,
    NonScalarLoss,
    TapeAlreadyConsumed,
    EmptyDataset,
    FeatureCountMismatch,
    LengthMismatch,
    ZeroRange,
    ZeroTruthValue,
    SplitOutOfRange,
    MissingColumn,
    ParseError,
    BadParams,
    CheckpointFormat,
};

/// Library-wide error: a machine-checkable kind plus a human-readable message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace stockcast
