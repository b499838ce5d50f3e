#include "ed2d/settings.hpp"

#include <cstdlib>
#include <cctype>
#include <fstream>
#include <set>

#include "ed2d/error.hpp"
#include "ed2d/text.hpp"

namespace ed2d {

namespace {

const std::set<std::string>& secret_keys() {
    static const std::set<std::string> keys{"backend.api_key", "service.api_key"};
    return keys;
}

std::map<std::string, nlohmann::json> defaults() {
    const DebateConfig debate;
    const HttpEndpoint http;
    const WikipediaOptions wiki;
    const EvidenceOptions ev;
    const service::ServiceOptions svc;
    std::map<std::string, nlohmann::json> d{
        {"backend.kind", "http"},
        {"backend.base_url", http.base_url},
        {"backend.model", http.model},
        {"backend.api_key", ""},
        {"backend.script", ""},
        {"backend.timeout_ms", 60000},
        {"backend.max_retries", 2},
        {"backend.backoff_ms", 500},
        {"debate.free_debate_rounds", debate.free_debate_rounds},
        {"debate.judge_panel_size", debate.judge_panel_size},
        {"debate.summary_budget", debate.summary_budget},
        {"debate.context_budget", debate.context_budget},
        {"debate.max_response_tokens", debate.max_response_tokens},
        {"debate.reflect_max_iterations", 3},
        {"evidence.enabled", true},
        {"evidence.api_url", wiki.api_url},
        {"evidence.user_agent", wiki.user_agent},
        {"evidence.requests_per_second", wiki.requests_per_second},
        {"evidence.timeout_ms", static_cast<long long>(wiki.timeout.count())},
        {"evidence.cache_dir", "cache/evidence"},
        {"evidence.fixture", ""},
        {"evidence.per_query", ev.per_query},
        {"evidence.segment_token_cap", ev.segment_token_cap},
        {"evidence.max_in_flight", ev.max_in_flight},
        {"service.host", "127.0.0.1"},
        {"service.port", 8080},
        {"service.storage", svc.storage.string()},
        {"service.max_concurrent", svc.max_concurrent},
        {"service.queue_capacity", svc.queue_capacity},
        {"service.rate_limit_per_minute", svc.rate_limit_per_minute},
        {"service.claim_max_chars", svc.claim_max_chars},
        {"service.watchdog_seconds", 600},
        {"service.heartbeat_seconds", 15},
        {"service.api_key", ""},
        {"service.static_dir", ""},
        {"bench.runs_dir", "runs"},
        {"bench.concurrency", 4},
        {"log.level", "info"},
    };
    for (const auto& [tag, value] : debate.temperatures.values()) d["temperature." + tag] = value;
    return d;
}

void flatten(const nlohmann::json& doc, const std::string& prefix, std::vector<std::pair<std::string, nlohmann::json>>& out) {
    for (const auto& [k, v] : doc.items()) {
        const auto key = prefix.empty() ? k : prefix + "." + k;
        if (v.is_object()) flatten(v, key, out);
        else out.emplace_back(key, v);
    }
}

nlohmann::json coerce(const nlohmann::json& like, const nlohmann::json& value, const std::string& key) {
    auto bad = [&] {
        return Error(ErrorKind::InvalidConfig, "setting " + key + " expects a " + std::string(like.type_name()) +
                                                   ", got " + value.dump());
    };
    if (like.is_boolean()) {
        if (value.is_boolean()) return value;
        if (value.is_string()) {
            const auto s = text::to_lower(text::trim(value.get<std::string>()));
            if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
            if (s == "false" || s == "0" || s == "no" || s == "off") return false;
        }
        throw bad();
    }
    if (like.is_number_integer()) {
        if (value.is_number_integer()) return value;
        if (value.is_string()) {
            const auto s = text::trim(value.get<std::string>());
            char* end = nullptr;
            const auto n = std::strtoll(s.c_str(), &end, 10);
            if (!s.empty() && end == s.c_str() + s.size()) return n;
        }
        throw bad();
    }
    if (like.is_number()) {
        if (value.is_number()) return value.get<double>();
        if (value.is_string()) {
            const auto s = text::trim(value.get<std::string>());
            char* end = nullptr;
            const auto n = std::strtod(s.c_str(), &end);
            if (!s.empty() && end == s.c_str() + s.size()) return n;
        }
        throw bad();
    }
    if (value.is_string()) return value;
    throw bad();
}

}  // namespace

Settings::Settings() {
    for (auto& [k, v] : defaults()) {
        values_[k] = v;
        sources_[k] = "default";
    }
}

std::vector<std::string> Settings::keys() {
    std::vector<std::string> out;
    for (const auto& [k, _] : defaults()) out.push_back(k);
    return out;
}

std::string Settings::env_name(const std::string& key) {
    std::string name = "ED2D_";
    for (char c : key) {
        if (c == '.' || c == '-') name += '_';
        else name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return name;
}

void Settings::assign(const std::string& key, nlohmann::json value, const std::string& source) {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error(ErrorKind::InvalidConfig, "unknown setting '" + key + "' (from " + source + ")");
    it->second = coerce(it->second, value, key);
    sources_[key] = source;
}

void Settings::merge_json(const nlohmann::json& doc, const std::string& source) {
    if (!doc.is_object()) throw Error(ErrorKind::InvalidConfig, source + ": top level must be an object");
    std::vector<std::pair<std::string, nlohmann::json>> flat;
    flatten(doc, "", flat);
    for (auto& [k, v] : flat) assign(k, std::move(v), source);
}

void Settings::merge_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::NotFound, "config file not found: " + file.string());
    auto doc = nlohmann::json::parse(in, nullptr, false, true);
    if (doc.is_discarded()) throw Error(ErrorKind::InvalidConfig, file.string() + " is not valid JSON");
    merge_json(doc, file.string());
}

void Settings::merge_env(const EnvLookup& lookup) {
    for (const auto& key : keys()) {
        const auto name = env_name(key);
        if (auto v = lookup(name)) assign(key, *v, "env " + name);
    }
    if (str("backend.api_key").empty()) {
        if (auto v = lookup("OPENAI_API_KEY"); v && !v->empty()) assign("backend.api_key", *v, "env OPENAI_API_KEY");
    }
}

void Settings::set(const std::string& key, const std::string& value, const std::string& source) {
    assign(key, value, source);
}

const nlohmann::json& Settings::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error(ErrorKind::InvalidConfig, "unknown setting '" + key + "'");
    return it->second;
}

const std::string& Settings::source(const std::string& key) const {
    auto it = sources_.find(key);
    if (it == sources_.end()) throw Error(ErrorKind::InvalidConfig, "unknown setting '" + key + "'");
    return it->second;
}

nlohmann::json Settings::dump(bool redact) const {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [k, v] : values_) {
        auto value = v;
        if (redact && secret_keys().contains(k) && !v.get<std::string>().empty()) value = "***";
        const auto dot = k.find('.');
        doc[k.substr(0, dot)][k.substr(dot + 1)] = value;
    }
    return doc;
}

DebateConfig Settings::debate_config() const {
    DebateConfig c;
    c.free_debate_rounds = static_cast<int>(integer("debate.free_debate_rounds"));
    c.judge_panel_size = static_cast<int>(integer("debate.judge_panel_size"));
    c.summary_budget = static_cast<int>(integer("debate.summary_budget"));
    c.context_budget = static_cast<int>(integer("debate.context_budget"));
    c.max_response_tokens = static_cast<int>(integer("debate.max_response_tokens"));
    c.evidence_enabled = boolean("evidence.enabled");
    for (const auto& [k, v] : values_) {
        if (k.starts_with("temperature.")) c.temperatures.set(k.substr(12), v.get<double>());
    }
    c.validate();
    return c;
}

BackendDescriptor Settings::backend() const {
    BackendDescriptor d;
    const auto kind = str("backend.kind");
    if (kind == "scripted") {
        if (str("backend.script").empty()) throw Error(ErrorKind::InvalidConfig, "scripted backend needs backend.script");
        d.target = ScriptSource{str("backend.script")};
    } else if (kind == "http") {
        HttpEndpoint e;
        e.base_url = str("backend.base_url");
        e.model = str("backend.model");
        e.api_key = str("backend.api_key");
        d.target = e;
    } else {
        throw Error(ErrorKind::InvalidConfig, "backend.kind must be http or scripted, got " + kind);
    }
    d.timeout = std::chrono::milliseconds(integer("backend.timeout_ms"));
    d.max_retries = static_cast<int>(integer("backend.max_retries"));
    d.backoff_base = std::chrono::milliseconds(integer("backend.backoff_ms"));
    if (d.timeout.count() <= 0 || d.max_retries < 0 || d.backoff_base.count() < 0) {
        throw Error(ErrorKind::InvalidConfig, "backend timeout, retries and backoff must be non-negative");
    }
    return d;
}

WikipediaOptions Settings::wikipedia() const {
    WikipediaOptions w;
    w.api_url = str("evidence.api_url");
    w.user_agent = str("evidence.user_agent");
    w.requests_per_second = number("evidence.requests_per_second");
    w.timeout = std::chrono::milliseconds(integer("evidence.timeout_ms"));
    return w;
}

EvidenceOptions Settings::evidence_options() const {
    EvidenceOptions o;
    o.per_query = static_cast<int>(integer("evidence.per_query"));
    o.segment_token_cap = static_cast<int>(integer("evidence.segment_token_cap"));
    o.max_in_flight = static_cast<int>(integer("evidence.max_in_flight"));
    o.validate();
    return o;
}

service::ServiceOptions Settings::service_options() const {
    service::ServiceOptions s;
    auto positive = [&](const char* key) {
        const auto v = integer(key);
        if (v <= 0) throw Error(ErrorKind::InvalidConfig, std::string(key) + " must be positive");
        return static_cast<std::size_t>(v);
    };
    s.storage = str("service.storage");
    s.max_concurrent = positive("service.max_concurrent");
    s.queue_capacity = positive("service.queue_capacity");
    s.rate_limit_per_minute = static_cast<std::size_t>(std::max(0LL, integer("service.rate_limit_per_minute")));
    s.claim_max_chars = positive("service.claim_max_chars");
    s.watchdog = std::chrono::seconds(positive("service.watchdog_seconds"));
    s.heartbeat = std::chrono::seconds(positive("service.heartbeat_seconds"));
    s.api_key = str("service.api_key");
    s.static_dir = str("service.static_dir");
    s.config = debate_config();
    return s;
}

Settings::EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

Settings load_settings(const std::optional<std::filesystem::path>& explicit_file, const Settings::EnvLookup& env,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
    Settings s;
    if (explicit_file) {
        s.merge_file(*explicit_file);
    } else if (std::filesystem::exists("ed2d.json")) {
        s.merge_file("ed2d.json");
    }
    s.merge_env(env);
    for (const auto& [k, v] : overrides) s.set(k, v);
    return s;
}

}  // namespace ed2d
