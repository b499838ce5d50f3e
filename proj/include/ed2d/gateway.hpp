#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ed2d/shape.hpp"

namespace ed2d {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role) noexcept;

struct Message {
    Role role = Role::User;
    std::string content;

    bool operator==(const Message&) const = default;
};

// Stable pipeline-step labels. Scripted backends key on them and the default
// temperature table is indexed by them.
namespace tag {
inline constexpr std::string_view kDomainInference = "domain-inference";
inline constexpr std::string_view kProfileGeneration = "profile-generation";
inline constexpr std::string_view kDebateUtterance = "debate-utterance";
inline constexpr std::string_view kStageCompression = "stage-compression";
inline constexpr std::string_view kEntityExtraction = "entity-extraction";
inline constexpr std::string_view kStanceClassification = "stance-classification";
inline constexpr std::string_view kJudgeBallot = "judge-ballot";
inline constexpr std::string_view kJudgmentSummary = "judgment-summary";
inline constexpr std::string_view kZeroShot = "zs-answer";
inline constexpr std::string_view kChainOfThought = "cot-answer";
inline constexpr std::string_view kReflectDraft = "sr-draft";
inline constexpr std::string_view kReflectCritique = "sr-critique";
inline constexpr std::string_view kReflectRevision = "sr-revision";
inline constexpr std::string_view kSmadTurn = "smad-turn";
inline constexpr std::string_view kSmadJudge = "smad-judge";
}  // namespace tag

struct ModelRequest {
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string tag;
    // Ordinal namespace for scripted matching (one claim/strategy run). Not sent over the wire.
    std::string scope;
};

enum class FinishReason { Complete, LengthCapped, Error };

std::string_view to_string(FinishReason reason) noexcept;

struct ModelResponse {
    std::string content;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    FinishReason finish_reason = FinishReason::Complete;
};

struct Usage {
    std::int64_t calls = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;

    Usage& operator+=(const Usage& o) {
        calls += o.calls;
        prompt_tokens += o.prompt_tokens;
        completion_tokens += o.completion_tokens;
        return *this;
    }
    bool operator==(const Usage&) const = default;
};

void to_json(nlohmann::json& j, const Usage& u);
void from_json(const nlohmann::json& j, Usage& u);

// Per-run token accounting; safe to update from concurrent calls.
class UsageLedger {
public:
    void record(std::string_view tag, const ModelResponse& response);
    Usage total() const;
    std::map<std::string, Usage> by_tag() const;

private:
    mutable std::mutex mu_;
    Usage total_;
    std::map<std::string, Usage, std::less<>> by_tag_;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual ModelResponse complete(const ModelRequest& request) = 0;
    virtual std::string describe() const = 0;
};

struct ScriptEntry {
    std::string tag;
    int ordinal = 0;  // 0 matches any ordinal not listed explicitly
    std::string scope;  // empty matches any scope
    std::string content;
};

// Canned responses keyed by (scope, tag, ordinal within tag). File form:
//   {"strict": true, "entries": [{"tag": "...", "ordinal": 1, "content": "..."}]}
// `content` may be a JSON object, which is stored in its compact dump.
class ScriptTable {
public:
    void add(ScriptEntry entry);
    void add(std::string tag, int ordinal, std::string content);

    // Lookup order: scoped exact, any-scope exact, scoped wildcard, any-scope wildcard.
    const ScriptEntry* find(std::string_view scope, std::string_view tag, int ordinal) const;

    std::size_t size() const noexcept { return entries_.size(); }
    bool strict = true;

    static ScriptTable from_json(const nlohmann::json& doc);
    static ScriptTable load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

private:
    std::vector<ScriptEntry> entries_;
};

// Deterministic backend for tests and demos. Ordinals count per (scope, tag).
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(ScriptTable table);

    ModelResponse complete(const ModelRequest& request) override;
    std::string describe() const override { return "scripted"; }

    std::size_t calls() const;
    std::size_t calls_for(std::string_view tag) const;

private:
    ScriptTable table_;
    mutable std::mutex mu_;
    std::map<std::pair<std::string, std::string>, int> ordinals_;
    std::map<std::string, std::size_t, std::less<>> calls_by_tag_;
    std::size_t calls_ = 0;
};

struct CallRecord {
    std::size_t sequence = 0;
    ModelRequest request;
    std::string response;
    std::string error;
};

struct GatewayOptions {
    int structured_retries = 2;
    bool keep_call_log = true;
};

// Uniform entry point for every model call: validates requests, dispatches to
// the backend, and records usage and (optionally) the full call log.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

    ModelResponse complete(const ModelRequest& request);

    // Issues `request`, extracts and conforms JSON against `shape`, then runs
    // `validate` for semantic checks. Each failure re-issues the request with a
    // corrective instruction appended, up to `structured_retries` extra attempts.
    using Validator = std::function<std::vector<std::string>(const nlohmann::json&)>;
    nlohmann::json structured_complete(const ModelRequest& request, const Shape& shape,
                                       const Validator& validate = {});

    const UsageLedger& ledger() const noexcept { return ledger_; }
    std::vector<CallRecord> call_log() const;
    std::size_t call_count() const;
    const GatewayOptions& options() const noexcept { return options_; }
    Backend& backend() noexcept { return *backend_; }

private:
    std::shared_ptr<Backend> backend_;
    GatewayOptions options_;
    UsageLedger ledger_;
    mutable std::mutex log_mu_;
    std::vector<CallRecord> log_;
    std::size_t sequence_ = 0;
};

struct TraceStep {
    std::string tag;
    std::string content;
};

void to_json(nlohmann::json& j, const TraceStep& t);
void from_json(const nlohmann::json& j, TraceStep& t);

// One pipeline run's view of the gateway: stamps the scope onto every request
// and keeps the run's own usage and raw trace. Not shared across threads.
class ModelSession {
public:
    ModelSession(Gateway& gateway, std::string scope) : gateway_(&gateway), scope_(std::move(scope)) {}

    ModelResponse complete(ModelRequest request);
    nlohmann::json structured_complete(ModelRequest request, const Shape& shape,
                                       const Gateway::Validator& validate = {});

    const std::string& scope() const noexcept { return scope_; }
    const Usage& usage() const noexcept { return usage_; }
    const std::vector<TraceStep>& trace() const noexcept { return trace_; }
    Gateway& gateway() noexcept { return *gateway_; }

private:
    Gateway* gateway_;
    std::string scope_;
    Usage usage_;
    std::vector<TraceStep> trace_;
};

}  // namespace ed2d
