// Error type shared by every ndkf module.
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ndkf {

enum class ErrorKind {
    NotSPD,
    NoConvergence,
    DimensionMismatch,
    EmptyDataset,
    DivergedLoss,
    MalformedFile,
    UnknownNode,
    NonFiniteState,
    SingularInnovation,
    LengthMismatch,
    InvalidStage,
    ConfigError,
    BadArgs,
    IoError,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-checkable kind next to the message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// The message without the kind prefix, for rethrowing with added context.
    const std::string &detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

} // namespace ndkf
