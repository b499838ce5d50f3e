#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ed2d/debate_config.hpp"
#include "ed2d/gateway.hpp"
#include "ed2d/shape.hpp"
#include "ed2d/types.hpp"

namespace ed2d {

// Integer bounds, per-dimension sum of seven, and each of the five dimensions
// present exactly once. Returns every violation found; never throws.
std::vector<std::string> validate_ballot(const JudgeBallot& ballot);

struct Tally {
    Label label = Label::Real;
    int affirmative_total = 0;
    int negative_total = 0;
    int margin = 0;
};

// Sums every pair across ballots and dimensions; Real iff affirmative_total is
// strictly larger. Throws InvalidPanel for an empty or even-sized panel and
// JudgmentFailed if a ballot does not validate.
Tally aggregate(std::span<const JudgeBallot> ballots);

// Wire form exchanged with judge models:
//   {"factuality": {"affirmative": 4, "negative": 3, "rationale": "..."}, ...}
const Shape& ballot_shape();
JudgeBallot ballot_from_wire(const nlohmann::json& wire, int judge);
nlohmann::json ballot_to_wire(const JudgeBallot& ballot);

// What every judge sees: compressed stage memory, the verbatim closing
// statements, and the full evidence pool (all three stances).
struct JudgeContext {
    const Claim* claim = nullptr;
    std::span<const StageSummary> summaries;
    std::span<const Utterance> closing;
    std::span<const EvidenceItem> evidence;
};

std::vector<Message> judge_messages(const JudgeContext& context, int context_budget);

// One independent structured call per judge. Ballots that still fail
// validation after retries raise JudgmentFailed; scores are never repaired.
std::vector<JudgeBallot> collect_ballots(ModelSession& session, const JudgeContext& context, int panel_size,
                                         const DebateConfig& config,
                                         const std::function<void(const JudgeBallot&)>& on_ballot = {});

const Shape& summary_shape();

// Three-section debunking summary (key arguments per side, evidence-based
// rebuttals, controversial points). Falls back to a mechanical assembly from
// stage summaries and ballots when the model cannot produce one.
DebateSummary summarize(ModelSession& session, const JudgeContext& context, const Tally& tally,
                        std::span<const Utterance> utterances, std::span<const JudgeBallot> ballots,
                        const DebateConfig& config);

DebateSummary mechanical_summary(std::span<const StageSummary> summaries, std::span<const Utterance> utterances,
                                 std::span<const JudgeBallot> ballots, int section_budget);

}  // namespace ed2d
