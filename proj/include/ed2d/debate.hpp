#pragma once

#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ed2d/debate_config.hpp"
#include "ed2d/evidence.hpp"
#include "ed2d/gateway.hpp"
#include "ed2d/judgment.hpp"
#include "ed2d/types.hpp"

namespace ed2d {

inline constexpr int kRecordSchemaVersion = 1;

struct DebateFailure {
    std::string stage;  // "setup" before Opening, else the stage name
    std::string kind;   // ErrorKind spelling
    std::string reason;

    bool operator==(const DebateFailure&) const = default;
};

void to_json(nlohmann::json& j, const DebateFailure& f);
void from_json(const nlohmann::json& j, DebateFailure& f);

// Full provenance of one debate. Appended to while the run is in progress and
// immutable once run_debate returns. A verdict is present iff all five stages
// completed.
struct DebateRecord {
    Claim claim;
    std::string domain;
    std::vector<AgentProfile> profiles;
    std::vector<Utterance> utterances;
    std::vector<StageSummary> summaries;
    std::vector<EvidenceQuery> evidence_queries;
    std::optional<EvidencePool> evidence;  // absent when evidence is disabled or never gathered
    std::vector<JudgeBallot> ballots;
    std::optional<Verdict> verdict;
    DebateConfig config;
    std::vector<std::string> flags;
    std::optional<DebateFailure> failure;
    Usage usage;
    std::string started_at;
    std::string finished_at;
    double elapsed_ms = 0.0;

    bool completed() const noexcept { return verdict.has_value(); }
};

void to_json(nlohmann::json& j, const DebateRecord& r);
void from_json(const nlohmann::json& j, DebateRecord& r);

// Record document with every wall-clock field removed; the golden-test form.
nlohmann::json canonical_json(const DebateRecord& record);
nlohmann::json strip_timing(nlohmann::json record_doc);

// Callbacks fire in the order the engine produces content.
class DebateObserver {
public:
    virtual ~DebateObserver() = default;
    virtual void stage_started(DebateStage /*stage*/, const DebateRecord& /*record*/) {}
    virtual void utterance(const Utterance& /*u*/) {}
    virtual void evidence_ready(const EvidencePool& /*pool*/, std::span<const EvidenceQuery> /*queries*/) {}
    virtual void stage_summary(const StageSummary& /*s*/) {}
    virtual void ballot(const JudgeBallot& /*b*/) {}
    virtual void verdict(const Verdict& /*v*/) {}
    virtual void failed(const DebateFailure& /*f*/) {}
};

struct DomainResult {
    std::string label;
    bool defaulted = false;
};

DomainResult infer_domain(ModelSession& session, const Claim& claim, const DebateConfig& config);

// Four affirmative then four negative profiles, seats 1..4. Throws
// ProfileGenerationFailed when the model never yields four per team.
std::vector<AgentProfile> generate_profiles(ModelSession& session, const Claim& claim, const std::string& domain,
                                            const DebateConfig& config);

struct SpeakerTurn {
    DebateStage stage = DebateStage::Opening;
    TeamStance team = TeamStance::Affirmative;
    int seat = 1;
    int round = 1;

    bool operator==(const SpeakerTurn&) const = default;
};

// Seat 1 opens, seat 2 rebuts, seat 3 carries every free-debate round, seat 4
// closes; affirmative before negative within each stage and round.
std::vector<SpeakerTurn> speaker_schedule(const DebateConfig& config);

// Throws InvalidStage for an empty stage. Summaries over budget are re-requested
// once with a tighter instruction, then hard-truncated and marked lossy.
StageSummary compress_stage(ModelSession& session, const Claim& claim, DebateStage stage,
                            std::span<const Utterance> utterances, int budget, const DebateConfig& config);

struct ContextInputs {
    const Claim* claim = nullptr;
    std::string domain;
    const AgentProfile* speaker = nullptr;
    DebateStage stage = DebateStage::Opening;
    int round = 1;
    int total_rounds = 1;
    std::span<const StageSummary> summaries;  // one per completed stage, in order
    std::span<const Utterance> stage_so_far;
    std::span<const EvidenceItem> evidence;  // the speaker's routed slice; used in Free Debate only
    int budget = 8192;
};

// Persona, claim, prior stage summaries, this stage's verbatim turns, the
// routed evidence and the turn instruction. Over budget, the oldest verbatim
// turns go first; summaries are never dropped (ContextOverflow instead).
std::vector<Message> build_context(const ContextInputs& inputs);

struct RunOptions {
    const EvidenceRetriever* evidence = nullptr;  // required when config.evidence_enabled
    DebateObserver* observer = nullptr;
    std::stop_token stop;
};

// Runs Opening, Rebuttal, Free Debate, Closing and Judgment in order. Stage
// failures do not throw: the partial record comes back with `failure` set.
DebateRecord run_debate(ModelSession& session, const Claim& claim, const DebateConfig& config,
                        const RunOptions& options = {});

}  // namespace ed2d
