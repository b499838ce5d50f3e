#pragma once

#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace ed2d {

// Sampling temperature per pipeline tag. Deterministic steps (domain inference,
// compression, extraction, stance, judging) run at 0.0; profile generation and
// debate turns at 0.7. Unknown tags fall back to 0.0.
class TemperatureTable {
public:
    TemperatureTable();

    double at(std::string_view tag) const;
    void set(std::string tag, double value);
    const std::map<std::string, double, std::less<>>& values() const noexcept { return values_; }

    bool operator==(const TemperatureTable&) const = default;

private:
    std::map<std::string, double, std::less<>> values_;
};

struct DebateConfig {
    int free_debate_rounds = 1;
    int judge_panel_size = 3;
    int summary_budget = 256;
    int context_budget = 8192;
    int max_response_tokens = 1024;
    bool evidence_enabled = true;  // false is the D2D variant
    TemperatureTable temperatures;

    // Throws Error(InvalidConfig).
    void validate() const;

    bool operator==(const DebateConfig&) const = default;
};

void to_json(nlohmann::json& j, const DebateConfig& c);
void from_json(const nlohmann::json& j, DebateConfig& c);

}  // namespace ed2d
