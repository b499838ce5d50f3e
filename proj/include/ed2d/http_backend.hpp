#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <variant>

#include "ed2d/gateway.hpp"

namespace ed2d {

struct HttpEndpoint {
    std::string base_url = "https://api.openai.com/v1";  // ".../chat/completions" is appended
    std::string model = "gpt-4o";
    std::string api_key;  // resolved from config/environment; never serialized into records
};

struct ScriptSource {
    std::filesystem::path path;
};

struct BackendDescriptor {
    std::variant<HttpEndpoint, ScriptSource> target;
    std::chrono::milliseconds timeout{60000};
    int max_retries = 2;  // extra attempts after the first
    std::chrono::milliseconds backoff_base{500};

    bool is_http() const noexcept { return std::holds_alternative<HttpEndpoint>(target); }
};

// Speaks the OpenAI chat-completions wire format. Retries transport failures
// and 429/5xx with exponential backoff plus jitter; other non-2xx replies are
// surfaced immediately as BackendRejected carrying the body.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(BackendDescriptor descriptor);
    ~HttpBackend() override;

    ModelResponse complete(const ModelRequest& request) override;
    std::string describe() const override;

    static nlohmann::json build_payload(const ModelRequest& request, const std::string& model);
    static ModelResponse parse_reply(const nlohmann::json& body, const ModelRequest& request);

private:
    struct Target {
        std::string scheme_host_port;
        std::string path;
    };
    static Target split_url(const std::string& base_url);

    BackendDescriptor descriptor_;
    HttpEndpoint endpoint_;
    Target target_;
    std::mutex rng_mu_;
    std::mt19937 rng_{std::random_device{}()};
};

std::shared_ptr<Backend> make_backend(const BackendDescriptor& descriptor);

}  // namespace ed2d
