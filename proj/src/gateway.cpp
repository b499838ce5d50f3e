#include "ed2d/gateway.hpp"

#include <fstream>

#include "ed2d/error.hpp"
#include "ed2d/text.hpp"

namespace ed2d {

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string_view to_string(FinishReason reason) noexcept {
    switch (reason) {
        case FinishReason::Complete: return "complete";
        case FinishReason::LengthCapped: return "length_capped";
        case FinishReason::Error: return "error";
    }
    return "error";
}

void to_json(nlohmann::json& j, const Usage& u) {
    j = {{"calls", u.calls}, {"prompt_tokens", u.prompt_tokens}, {"completion_tokens", u.completion_tokens}};
}

void from_json(const nlohmann::json& j, Usage& u) {
    u.calls = j.value("calls", std::int64_t{0});
    u.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
    u.completion_tokens = j.value("completion_tokens", std::int64_t{0});
}

void to_json(nlohmann::json& j, const TraceStep& t) { j = {{"tag", t.tag}, {"content", t.content}}; }

void from_json(const nlohmann::json& j, TraceStep& t) {
    t.tag = j.at("tag").get<std::string>();
    t.content = j.at("content").get<std::string>();
}

// ---------------------------------------------------------------------------
// UsageLedger

void UsageLedger::record(std::string_view tag, const ModelResponse& response) {
    const Usage delta{1, response.prompt_tokens, response.completion_tokens};
    std::lock_guard lock(mu_);
    total_ += delta;
    auto it = by_tag_.find(tag);
    if (it == by_tag_.end()) it = by_tag_.emplace(std::string(tag), Usage{}).first;
    it->second += delta;
}

Usage UsageLedger::total() const {
    std::lock_guard lock(mu_);
    return total_;
}

std::map<std::string, Usage> UsageLedger::by_tag() const {
    std::lock_guard lock(mu_);
    return {by_tag_.begin(), by_tag_.end()};
}

// ---------------------------------------------------------------------------
// ScriptTable / ScriptedBackend

void ScriptTable::add(ScriptEntry entry) { entries_.push_back(std::move(entry)); }

void ScriptTable::add(std::string tag, int ordinal, std::string content) {
    entries_.push_back(ScriptEntry{std::move(tag), ordinal, {}, std::move(content)});
}

const ScriptEntry* ScriptTable::find(std::string_view scope, std::string_view tag, int ordinal) const {
    const ScriptEntry* best = nullptr;
    int best_rank = 0;
    for (const auto& e : entries_) {
        if (e.tag != tag) continue;
        const bool scope_exact = !e.scope.empty() && e.scope == scope;
        if (!e.scope.empty() && !scope_exact) continue;
        if (e.ordinal != 0 && e.ordinal != ordinal) continue;
        const int rank = (e.ordinal != 0 ? 2 : 0) + (scope_exact ? 1 : 0) + 1;
        if (rank > best_rank) {
            best = &e;
            best_rank = rank;
        }
    }
    return best;
}

ScriptTable ScriptTable::from_json(const nlohmann::json& doc) {
    ScriptTable table;
    table.strict = doc.value("strict", true);
    for (const auto& e : doc.at("entries")) {
        ScriptEntry entry;
        entry.tag = e.at("tag").get<std::string>();
        entry.ordinal = e.value("ordinal", 0);
        entry.scope = e.value("scope", std::string{});
        const auto& content = e.at("content");
        entry.content = content.is_string() ? content.get<std::string>() : content.dump();
        if (entry.ordinal < 0) throw Error(ErrorKind::InvalidConfig, "script entry ordinal must be >= 0");
        table.add(std::move(entry));
    }
    return table;
}

ScriptTable ScriptTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::NotFound, "script table not found: " + path.string());
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorKind::InvalidConfig, "script table is not valid JSON: " + path.string());
    return from_json(doc);
}

nlohmann::json ScriptTable::to_json() const {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : entries_) {
        nlohmann::json j{{"tag", e.tag}, {"content", e.content}};
        if (e.ordinal) j["ordinal"] = e.ordinal;
        if (!e.scope.empty()) j["scope"] = e.scope;
        entries.push_back(std::move(j));
    }
    return {{"strict", strict}, {"entries", std::move(entries)}};
}

ScriptedBackend::ScriptedBackend(ScriptTable table) : table_(std::move(table)) {}

ModelResponse ScriptedBackend::complete(const ModelRequest& request) {
    std::int64_t prompt_tokens = 0;
    for (const auto& m : request.messages) prompt_tokens += static_cast<std::int64_t>(text::count_tokens(m.content));

    std::string content;
    {
        std::lock_guard lock(mu_);
        const int ordinal = ++ordinals_[{request.scope, request.tag}];
        ++calls_;
        auto it = calls_by_tag_.find(request.tag);
        if (it == calls_by_tag_.end()) it = calls_by_tag_.emplace(request.tag, 0).first;
        ++it->second;
        if (const auto* entry = table_.find(request.scope, request.tag, ordinal)) {
            content = entry->content;
        } else if (table_.strict) {
            throw Error(ErrorKind::ScriptMiss,
                        "no script entry for tag '" + request.tag + "' ordinal " + std::to_string(ordinal) +
                            (request.scope.empty() ? "" : " scope '" + request.scope + "'"));
        }
    }

    ModelResponse response;
    response.prompt_tokens = prompt_tokens;
    const auto tokens = text::count_tokens(content);
    if (tokens > static_cast<std::size_t>(request.max_tokens)) {
        response.content = text::truncate_tokens(content, static_cast<std::size_t>(request.max_tokens));
        response.completion_tokens = request.max_tokens;
        response.finish_reason = FinishReason::LengthCapped;
    } else {
        response.content = std::move(content);
        response.completion_tokens = static_cast<std::int64_t>(tokens);
    }
    return response;
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::size_t ScriptedBackend::calls_for(std::string_view tag) const {
    std::lock_guard lock(mu_);
    auto it = calls_by_tag_.find(tag);
    return it == calls_by_tag_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Gateway

namespace {

void validate_request(const ModelRequest& request) {
    if (request.max_tokens <= 0) throw Error(ErrorKind::InvalidRequest, "max_tokens must be positive");
    if (!(request.temperature >= 0.0 && request.temperature <= 2.0)) {
        throw Error(ErrorKind::InvalidRequest, "temperature must lie in [0, 2]");
    }
    if (request.messages.empty()) throw Error(ErrorKind::InvalidRequest, "request has no messages");
    if (request.tag.empty()) throw Error(ErrorKind::InvalidRequest, "request has no tag");
}

template <typename CompleteFn>
nlohmann::json structured_loop(const ModelRequest& request, const Shape& shape, const Gateway::Validator& validate,
                               int retries, CompleteFn&& complete) {
    std::vector<std::string> raws;
    ModelRequest attempt = request;
    for (int i = 0; i <= retries; ++i) {
        const auto response = complete(attempt);
        raws.push_back(response.content);

        std::vector<std::string> violations;
        auto parsed = extract_json(response.content, shape);
        if (!parsed) {
            violations.push_back("reply is not a JSON object");
        } else {
            violations = shape.conform(*parsed);
            if (violations.empty() && validate) violations = validate(*parsed);
            if (violations.empty()) return *parsed;
        }

        std::string problems;
        for (const auto& v : violations) problems += "\n- " + v;
        attempt = request;
        attempt.messages.push_back(Message{
            Role::User,
            "Your previous reply could not be used:" + problems +
                "\nRespond only with the required fields: a single JSON object of the form " + shape.describe() +
                ". Do not add any other text."});
    }
    throw Error(ErrorKind::StructuredParseFailure,
                "no conforming reply for '" + request.tag + "' after " + std::to_string(retries + 1) + " attempts",
                std::move(raws));
}

}  // namespace

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(options) {
    if (!backend_) throw Error(ErrorKind::InvalidConfig, "gateway needs a backend");
    if (options_.structured_retries < 0) throw Error(ErrorKind::InvalidConfig, "structured_retries must be >= 0");
}

ModelResponse Gateway::complete(const ModelRequest& request) {
    validate_request(request);
    ModelResponse response;
    try {
        response = backend_->complete(request);
    } catch (const std::exception& e) {
        if (options_.keep_call_log) {
            std::lock_guard lock(log_mu_);
            log_.push_back(CallRecord{++sequence_, request, {}, e.what()});
        }
        throw;
    }
    ledger_.record(request.tag, response);
    if (options_.keep_call_log) {
        std::lock_guard lock(log_mu_);
        log_.push_back(CallRecord{++sequence_, request, response.content, {}});
    }
    return response;
}

nlohmann::json Gateway::structured_complete(const ModelRequest& request, const Shape& shape,
                                            const Validator& validate) {
    return structured_loop(request, shape, validate, options_.structured_retries,
                           [this](const ModelRequest& r) { return complete(r); });
}

std::vector<CallRecord> Gateway::call_log() const {
    std::lock_guard lock(log_mu_);
    return log_;
}

std::size_t Gateway::call_count() const { return static_cast<std::size_t>(ledger_.total().calls); }

// ---------------------------------------------------------------------------
// ModelSession

ModelResponse ModelSession::complete(ModelRequest request) {
    request.scope = scope_;
    auto response = gateway_->complete(request);
    usage_ += Usage{1, response.prompt_tokens, response.completion_tokens};
    trace_.push_back(TraceStep{request.tag, response.content});
    return response;
}

nlohmann::json ModelSession::structured_complete(ModelRequest request, const Shape& shape,
                                                 const Gateway::Validator& validate) {
    request.scope = scope_;
    return structured_loop(request, shape, validate, gateway_->options().structured_retries,
                           [this](const ModelRequest& r) { return complete(r); });
}

}  // namespace ed2d
