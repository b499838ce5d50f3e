#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ed2d/debate_config.hpp"
#include "ed2d/evidence.hpp"
#include "ed2d/http_backend.hpp"
#include "ed2d/service.hpp"

namespace ed2d {

// Effective configuration. Every key is dotted ("backend.model"); the file is
// JSON nested along the dots, the environment variable is ED2D_ followed by
// the key upper-cased with '.' and '-' turned into '_' (ED2D_BACKEND_MODEL).
// Precedence: flags > environment > file > defaults.
class Settings {
public:
    using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

    Settings();

    // Throws InvalidConfig for unknown keys or mistyped values.
    void merge_file(const std::filesystem::path& file);
    void merge_json(const nlohmann::json& doc, const std::string& source);
    void merge_env(const EnvLookup& lookup);
    void set(const std::string& key, const std::string& value, const std::string& source = "flag");

    const nlohmann::json& get(const std::string& key) const;
    std::string str(const std::string& key) const { return get(key).get<std::string>(); }
    long long integer(const std::string& key) const { return get(key).get<long long>(); }
    double number(const std::string& key) const { return get(key).get<double>(); }
    bool boolean(const std::string& key) const { return get(key).get<bool>(); }
    const std::string& source(const std::string& key) const;

    // Nested document; secrets show as "***" when set.
    nlohmann::json dump(bool redact = true) const;
    static std::vector<std::string> keys();
    static std::string env_name(const std::string& key);

    DebateConfig debate_config() const;
    BackendDescriptor backend() const;
    WikipediaOptions wikipedia() const;
    EvidenceOptions evidence_options() const;
    service::ServiceOptions service_options() const;

private:
    void assign(const std::string& key, nlohmann::json value, const std::string& source);

    std::map<std::string, nlohmann::json> values_;
    std::map<std::string, std::string> sources_;
};

Settings::EnvLookup process_env();

// Defaults, then the config file (explicit path must exist; otherwise ./ed2d.json
// when present), then the environment, then flag overrides in order.
Settings load_settings(const std::optional<std::filesystem::path>& explicit_file,
                       const Settings::EnvLookup& env,
                       const std::vector<std::pair<std::string, std::string>>& overrides);

}  // namespace ed2d
