#include "ed2d/debate_config.hpp"

#include "ed2d/error.hpp"
#include "ed2d/gateway.hpp"

namespace ed2d {

TemperatureTable::TemperatureTable() {
    for (auto t : {tag::kDomainInference, tag::kStageCompression, tag::kEntityExtraction,
                   tag::kStanceClassification, tag::kJudgeBallot, tag::kJudgmentSummary, tag::kZeroShot,
                   tag::kChainOfThought, tag::kReflectDraft, tag::kReflectCritique, tag::kReflectRevision,
                   tag::kSmadJudge}) {
        values_.emplace(std::string(t), 0.0);
    }
    for (auto t : {tag::kProfileGeneration, tag::kDebateUtterance, tag::kSmadTurn}) {
        values_.emplace(std::string(t), 0.7);
    }
}

double TemperatureTable::at(std::string_view tag) const {
    auto it = values_.find(tag);
    return it == values_.end() ? 0.0 : it->second;
}

void TemperatureTable::set(std::string tag, double value) {
    if (!(value >= 0.0 && value <= 2.0)) throw Error(ErrorKind::InvalidConfig, "temperature for " + tag + " outside [0, 2]");
    values_[std::move(tag)] = value;
}

void DebateConfig::validate() const {
    if (free_debate_rounds < 1) throw Error(ErrorKind::InvalidConfig, "free_debate_rounds must be positive");
    if (judge_panel_size < 1 || judge_panel_size % 2 == 0) {
        throw Error(ErrorKind::InvalidConfig, "judge panel size must be odd and positive, got " +
                                                  std::to_string(judge_panel_size));
    }
    if (summary_budget < 1 || context_budget < 1) throw Error(ErrorKind::InvalidConfig, "budgets must be positive");
    if (max_response_tokens < 1 || max_response_tokens > 1024) {
        throw Error(ErrorKind::InvalidConfig, "max_response_tokens must lie in [1, 1024]");
    }
}

void to_json(nlohmann::json& j, const DebateConfig& c) {
    nlohmann::json temps = nlohmann::json::object();
    for (const auto& [tag, t] : c.temperatures.values()) temps[tag] = t;
    j = {{"free_debate_rounds", c.free_debate_rounds},
         {"judge_panel_size", c.judge_panel_size},
         {"summary_budget", c.summary_budget},
         {"context_budget", c.context_budget},
         {"max_response_tokens", c.max_response_tokens},
         {"evidence_enabled", c.evidence_enabled},
         {"temperatures", std::move(temps)}};
}

void from_json(const nlohmann::json& j, DebateConfig& c) {
    c = DebateConfig{};
    c.free_debate_rounds = j.value("free_debate_rounds", c.free_debate_rounds);
    c.judge_panel_size = j.value("judge_panel_size", c.judge_panel_size);
    c.summary_budget = j.value("summary_budget", c.summary_budget);
    c.context_budget = j.value("context_budget", c.context_budget);
    c.max_response_tokens = j.value("max_response_tokens", c.max_response_tokens);
    c.evidence_enabled = j.value("evidence_enabled", c.evidence_enabled);
    if (auto it = j.find("temperatures"); it != j.end()) {
        for (const auto& [tag, t] : it->items()) c.temperatures.set(tag, t.get<double>());
    }
}

}  // namespace ed2d
