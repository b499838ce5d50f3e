#pragma once

#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ed2d/debate.hpp"
#include "ed2d/debate_config.hpp"
#include "ed2d/evidence.hpp"
#include "ed2d/gateway.hpp"
#include "ed2d/types.hpp"

namespace ed2d {

enum class Strategy { ZeroShot, ChainOfThought, SelfReflect, StandardMad, D2D, ED2D };

struct StrategySpec {
    Strategy strategy = Strategy::ZeroShot;
    bool with_evidence = false;

    // "zs", "zs+ev", "cot", "cot+ev", "sr", "sr+ev", "smad", "smad+ev", "d2d", "ed2d"
    std::string key() const;
    // Row label for reports: "ZS", "ZS w/ evidence", ...
    std::string display() const;

    bool operator==(const StrategySpec&) const = default;
    auto operator<=>(const StrategySpec&) const = default;
};

// Throws InvalidConfig for unknown keys; "d2d+ev" does not exist (that is ed2d).
StrategySpec parse_strategy(std::string_view key);
void validate(const StrategySpec& spec);
std::vector<StrategySpec> all_strategies();

struct Prediction {
    std::string claim_id;
    std::string strategy;  // StrategySpec::key()
    Label label = Label::Real;
    std::vector<TraceStep> trace;
    double latency_ms = 0.0;
    Usage usage;
    std::vector<std::string> flags;
    std::optional<nlohmann::json> record;  // debate strategies only

    bool operator==(const Prediction&) const = default;
};

void to_json(nlohmann::json& j, const Prediction& p);
void from_json(const nlohmann::json& j, Prediction& p);

struct StrategyOptions {
    DebateConfig config;
    int reflect_max_iterations = 3;
    const EvidenceRetriever* evidence = nullptr;  // required for any +ev strategy
    DebateObserver* observer = nullptr;           // debate strategies only
    std::stop_token stop;
};

// Single constrained-label calls.
Prediction run_zero_shot(ModelSession& session, const Claim& claim, bool with_evidence, const StrategyOptions& options);
Prediction run_cot(ModelSession& session, const Claim& claim, bool with_evidence, const StrategyOptions& options);

// Draft, then critique and revision until two consecutive iterations agree on
// the label or reflect_max_iterations is reached.
Prediction run_self_reflect(ModelSession& session, const Claim& claim, bool with_evidence,
                            const StrategyOptions& options);

// Pro/con agents for four alternating turns, then one judge call.
Prediction run_smad(ModelSession& session, const Claim& claim, bool with_evidence, const StrategyOptions& options);

// Full five-stage debate; D2D is the same pipeline without retrieval.
Prediction run_debate_strategy(ModelSession& session, const Claim& claim, bool with_evidence,
                               const StrategyOptions& options);

// Dispatches on spec. Label failures raise PredictionFailed; BackendUnreachable
// and Interrupted propagate unchanged.
Prediction predict(ModelSession& session, const Claim& claim, const StrategySpec& spec,
                   const StrategyOptions& options);

}  // namespace ed2d
