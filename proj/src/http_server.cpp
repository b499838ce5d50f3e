#include <httplib.h>

#include <charconv>

#include <spdlog/spdlog.h>

#include "ed2d/error.hpp"
#include "ed2d/service.hpp"

namespace ed2d::service {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
    send_json(res, status, {{"error", kind}, {"message", message}});
}

std::string presented_key(const httplib::Request& req) {
    if (req.has_header("X-API-Key")) return req.get_header_value("X-API-Key");
    const auto auth = req.get_header_value("Authorization");
    constexpr std::string_view bearer = "Bearer ";
    if (auth.starts_with(bearer)) return auth.substr(bearer.size());
    return {};
}

std::optional<std::size_t> positive_param(const httplib::Request& req, const char* name, std::size_t fallback) {
    if (!req.has_param(name)) return fallback;
    const auto v = req.get_param_value(name);
    std::size_t n = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc{} || ptr != v.data() + v.size() || n == 0) return std::nullopt;
    return n;
}

std::string sse_frame(const Event& e) {
    return "id: " + std::to_string(e.sequence) + "\nevent: " + e.kind + "\ndata: " + nlohmann::json(e).dump() + "\n\n";
}

}  // namespace

struct HttpServer::Impl {
    explicit Impl(DebateService& s) : svc(s) {}

    DebateService& svc;
    httplib::Server server;

    void routes();
    void stream(const std::string& id, const httplib::Request& req, httplib::Response& res);
};

void HttpServer::Impl::routes() {
    server.new_task_queue = [] { return new httplib::ThreadPool(64); };
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, Authorization, X-API-Key, Last-Event-ID");
        res.status = 204;
    });

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    });
    server.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, svc.metrics());
    });

    server.Post("/debates", [this](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded()) return send_error(res, 400, "validation", "request body is not valid JSON");
        const auto result = svc.create(body, req.remote_addr, presented_key(req));
        if (result.retry_after > 0) res.set_header("Retry-After", std::to_string(result.retry_after));
        if (result.status == 202) res.set_header("Location", "/debates/" + result.body.at("id").get<std::string>());
        send_json(res, result.status, result.body);
    });

    server.Get("/debates", [this](const httplib::Request& req, httplib::Response& res) {
        ListQuery q;
        const auto page = positive_param(req, "page", 1);
        const auto size = positive_param(req, "page_size", 20);
        if (!page || !size) return send_error(res, 400, "validation", "page and page_size must be positive integers");
        q.page = *page;
        q.page_size = *size;
        if (req.has_param("label")) {
            q.label = parse_label(req.get_param_value("label"));
            if (!q.label) return send_error(res, 400, "validation", "label must be real or fake");
        }
        if (req.has_param("status")) {
            q.status = parse_status(req.get_param_value("status"));
            if (!q.status) return send_error(res, 400, "validation", "unknown status filter");
        }
        send_json(res, 200, svc.list(q));
    });

    server.Get(R"(/debates/([A-Za-z0-9-]+))", [this](const httplib::Request& req, httplib::Response& res) {
        auto view = svc.view(req.matches[1]);
        if (!view) return send_error(res, 404, "not-found", "no debate with id " + std::string(req.matches[1]));
        send_json(res, 200, *view);
    });

    server.Get(R"(/debates/([A-Za-z0-9-]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
        stream(req.matches[1], req, res);
    });

    if (const auto& dir = svc.options().static_dir; !dir.empty()) {
        if (!server.set_mount_point("/", dir.string())) spdlog::warn("static directory {} not found", dir.string());
    }

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        spdlog::error("request failed: {}", what);
        send_error(res, 500, "internal", what);
    });
}

void HttpServer::Impl::stream(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    if (!svc.store().get(id)) return send_error(res, 404, "not-found", "no debate with id " + id);
    std::uint64_t from = 1;
    if (req.has_param("from")) {
        const auto v = req.get_param_value("from");
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), from);
        if (ec != std::errc{} || ptr != v.data() + v.size()) {
            return send_error(res, 400, "validation", "from must be a non-negative integer");
        }
    } else if (req.has_header("Last-Event-ID")) {
        const auto v = req.get_header_value("Last-Event-ID");
        std::uint64_t last = 0;
        if (std::from_chars(v.data(), v.data() + v.size(), last).ec == std::errc{}) from = last + 1;
    }
    from = std::max<std::uint64_t>(from, 1);

    res.set_header("Cache-Control", "no-cache");
    res.set_header("X-Accel-Buffering", "no");
    auto cursor = std::make_shared<std::uint64_t>(from);
    auto& service = svc;
    res.set_chunked_content_provider("text/event-stream", [&service, id, cursor](std::size_t, httplib::DataSink& sink) {
        bool closed = false;
        const auto events = service.store().wait_events(id, *cursor, service.options().heartbeat, closed);
        if (events.empty()) {
            if (closed || service.stopping()) {
                sink.done();
                return true;
            }
            static constexpr std::string_view heartbeat = ": heartbeat\n\n";
            return sink.write(heartbeat.data(), heartbeat.size());
        }
        for (const auto& e : events) {
            const auto frame = sse_frame(e);
            if (!sink.write(frame.data(), frame.size())) return false;
            *cursor = e.sequence + 1;
            if (e.terminal()) {
                sink.done();
                return true;
            }
        }
        return true;
    });
}

HttpServer::HttpServer(DebateService& service) : impl_(std::make_unique<Impl>(service)) { impl_->routes(); }

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        return port_ > 0;
    }
    if (!impl_->server.bind_to_port(host, port)) return false;
    port_ = port;
    return true;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
    impl_->svc.store().wake_all();
}

}  // namespace ed2d::service
