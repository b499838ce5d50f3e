#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ed2d {

enum class ErrorKind {
    InvalidRequest,
    InvalidConfig,
    InvalidClaim,
    BackendUnreachable,
    BackendRejected,
    ScriptMiss,
    StructuredParseFailure,
    ProfileGenerationFailed,
    InvalidStage,
    ContextOverflow,
    JudgmentFailed,
    InvalidPanel,
    PredictionFailed,
    DatasetError,
    CountMismatch,
    EmptyEvaluation,
    NotFound,
    Validation,
    RateLimited,
    QueueFull,
    Unauthorized,
    Interrupted,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure the library raises on purpose is an Error; `details` carries
// diagnostics such as raw model responses or an HTTP error body.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, std::vector<std::string> details = {})
        : std::runtime_error(std::string(to_string(kind)) + ": " + message),
          kind_(kind),
          details_(std::move(details)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::vector<std::string>& details() const noexcept { return details_; }

private:
    ErrorKind kind_;
    std::vector<std::string> details_;
};

}  // namespace ed2d
