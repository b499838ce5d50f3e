#include "ed2d/http_backend.hpp"

#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "ed2d/error.hpp"
#include "ed2d/text.hpp"

namespace ed2d {

HttpBackend::HttpBackend(BackendDescriptor descriptor)
    : descriptor_(std::move(descriptor)), endpoint_(std::get<HttpEndpoint>(descriptor_.target)) {
    if (descriptor_.max_retries < 0) throw Error(ErrorKind::InvalidConfig, "max_retries must be >= 0");
    target_ = split_url(endpoint_.base_url);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::describe() const { return "http:" + endpoint_.base_url + " model=" + endpoint_.model; }

HttpBackend::Target HttpBackend::split_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) throw Error(ErrorKind::InvalidConfig, "base_url needs a scheme: " + base_url);
    const auto path_start = base_url.find('/', scheme_end + 3);
    Target t;
    t.scheme_host_port = base_url.substr(0, path_start);
    t.path = path_start == std::string::npos ? "" : base_url.substr(path_start);
    while (!t.path.empty() && t.path.back() == '/') t.path.pop_back();
    t.path += "/chat/completions";
    return t;
}

nlohmann::json HttpBackend::build_payload(const ModelRequest& request, const std::string& model) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    return {{"model", model},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
}

ModelResponse HttpBackend::parse_reply(const nlohmann::json& body, const ModelRequest& request) {
    const auto& choices = body.at("choices");
    if (!choices.is_array() || choices.empty()) throw Error(ErrorKind::BackendRejected, "reply has no choices");
    const auto& choice = choices.front();
    ModelResponse response;
    const auto& content = choice.at("message").at("content");
    response.content = content.is_string() ? content.get<std::string>() : std::string{};
    const auto finish = choice.value("finish_reason", std::string{"stop"});
    response.finish_reason = finish == "length" ? FinishReason::LengthCapped : FinishReason::Complete;
    if (auto usage = body.find("usage"); usage != body.end() && usage->is_object()) {
        response.prompt_tokens = usage->value("prompt_tokens", std::int64_t{0});
        response.completion_tokens = usage->value("completion_tokens", std::int64_t{0});
    } else {
        for (const auto& m : request.messages) {
            response.prompt_tokens += static_cast<std::int64_t>(text::count_tokens(m.content));
        }
        response.completion_tokens = static_cast<std::int64_t>(text::count_tokens(response.content));
    }
    return response;
}

ModelResponse HttpBackend::complete(const ModelRequest& request) {
    const auto payload = build_payload(request, endpoint_.model).dump();
    const int attempts = 1 + descriptor_.max_retries;
    std::string last_problem;

    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            auto base = descriptor_.backoff_base * (1LL << (attempt - 1));
            std::chrono::milliseconds jitter{0};
            if (base.count() > 0) {
                std::lock_guard lock(rng_mu_);
                jitter = std::chrono::milliseconds(std::uniform_int_distribution<long long>(0, base.count())(rng_));
            }
            std::this_thread::sleep_for(base + jitter);
        }

        httplib::Client client(target_.scheme_host_port);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(descriptor_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(descriptor_.timeout - secs);
        client.set_connection_timeout(secs.count(), static_cast<time_t>(usecs.count()));
        client.set_read_timeout(secs.count(), static_cast<time_t>(usecs.count()));
        client.set_write_timeout(secs.count(), static_cast<time_t>(usecs.count()));
        httplib::Headers headers;
        if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

        auto result = client.Post(target_.path, headers, payload, "application/json");
        if (!result) {
            last_problem = "transport error: " + httplib::to_string(result.error());
            spdlog::warn("model backend attempt {}/{} failed: {}", attempt + 1, attempts, last_problem);
            continue;
        }
        const int status = result->status;
        if (status == 429 || status >= 500) {
            last_problem = "HTTP " + std::to_string(status) + ": " + result->body;
            spdlog::warn("model backend attempt {}/{} failed: HTTP {}", attempt + 1, attempts, status);
            continue;
        }
        if (status < 200 || status >= 300) {
            throw Error(ErrorKind::BackendRejected, "HTTP " + std::to_string(status), {result->body});
        }
        auto body = nlohmann::json::parse(result->body, nullptr, false);
        if (body.is_discarded()) throw Error(ErrorKind::BackendRejected, "reply is not JSON", {result->body});
        try {
            return parse_reply(body, request);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::BackendRejected, std::string("malformed reply: ") + e.what(), {result->body});
        }
    }
    throw Error(ErrorKind::BackendUnreachable,
                "giving up after " + std::to_string(attempts) + " attempts to " + endpoint_.base_url, {last_problem});
}

std::shared_ptr<Backend> make_backend(const BackendDescriptor& descriptor) {
    if (const auto* script = std::get_if<ScriptSource>(&descriptor.target)) {
        return std::make_shared<ScriptedBackend>(ScriptTable::load(script->path));
    }
    return std::make_shared<HttpBackend>(descriptor);
}

}  // namespace ed2d
