#include "ed2d/error.hpp"

namespace ed2d {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidRequest: return "invalid-request";
        case ErrorKind::InvalidConfig: return "invalid-config";
        case ErrorKind::InvalidClaim: return "invalid-claim";
        case ErrorKind::BackendUnreachable: return "backend-unreachable";
        case ErrorKind::BackendRejected: return "backend-rejected";
        case ErrorKind::ScriptMiss: return "script-miss";
        case ErrorKind::StructuredParseFailure: return "structured-parse-failure";
        case ErrorKind::ProfileGenerationFailed: return "profile-generation-failed";
        case ErrorKind::InvalidStage: return "invalid-stage";
        case ErrorKind::ContextOverflow: return "context-overflow";
        case ErrorKind::JudgmentFailed: return "judgment-failed";
        case ErrorKind::InvalidPanel: return "invalid-panel";
        case ErrorKind::PredictionFailed: return "prediction-failed";
        case ErrorKind::DatasetError: return "dataset-error";
        case ErrorKind::CountMismatch: return "count-mismatch";
        case ErrorKind::EmptyEvaluation: return "empty-evaluation";
        case ErrorKind::NotFound: return "not-found";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::RateLimited: return "rate-limited";
        case ErrorKind::QueueFull: return "queue-full";
        case ErrorKind::Unauthorized: return "unauthorized";
        case ErrorKind::Interrupted: return "interrupted";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace ed2d
