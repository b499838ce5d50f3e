#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ed2d {

enum class Label { Real, Fake };
enum class TeamStance { Affirmative, Negative };
enum class DebateStage { Opening, Rebuttal, FreeDebate, Closing, Judgment };
enum class Stance { Supporting, Refuting, Neutral };
enum class QueryOrigin { Entity, Relation, Concept };
enum class Dimension { Factuality, SourceReliability, ReasoningQuality, Clarity, EthicalConsiderations };

inline constexpr std::array<DebateStage, 5> kAllStages = {DebateStage::Opening, DebateStage::Rebuttal,
                                                          DebateStage::FreeDebate, DebateStage::Closing,
                                                          DebateStage::Judgment};
inline constexpr std::array<DebateStage, 4> kSpeakingStages = {DebateStage::Opening, DebateStage::Rebuttal,
                                                               DebateStage::FreeDebate, DebateStage::Closing};
inline constexpr std::array<TeamStance, 2> kTeams = {TeamStance::Affirmative, TeamStance::Negative};
inline constexpr std::array<Dimension, 5> kDimensions = {Dimension::Factuality, Dimension::SourceReliability,
                                                         Dimension::ReasoningQuality, Dimension::Clarity,
                                                         Dimension::EthicalConsiderations};

inline constexpr int kSeatsPerTeam = 4;
inline constexpr int kPointsPerDimension = 7;

std::string_view to_string(Label v) noexcept;
std::string_view to_string(TeamStance v) noexcept;
std::string_view to_string(DebateStage v) noexcept;
std::string_view to_string(Stance v) noexcept;
std::string_view to_string(QueryOrigin v) noexcept;
std::string_view to_string(Dimension v) noexcept;

// Human-facing stage title ("Free Debate").
std::string_view title(DebateStage v) noexcept;
std::string_view title(Dimension v) noexcept;

std::optional<Label> parse_label(std::string_view s);
std::optional<TeamStance> parse_team(std::string_view s);
std::optional<DebateStage> parse_stage(std::string_view s);
std::optional<Stance> parse_stance(std::string_view s);
std::optional<QueryOrigin> parse_origin(std::string_view s);
std::optional<Dimension> parse_dimension(std::string_view s);

constexpr int stage_index(DebateStage s) noexcept { return static_cast<int>(s); }
constexpr int dimension_index(Dimension d) noexcept { return static_cast<int>(d); }

struct Claim {
    std::string id;
    std::string text;
    std::optional<std::string> language;
    std::optional<Label> gold_label;  // benchmark use only; never rendered into a prompt
    std::map<std::string, std::string> metadata;
};

// Throws Error(InvalidClaim) when the text is blank.
void validate_claim(const Claim& claim);

struct AgentProfile {
    TeamStance team = TeamStance::Affirmative;
    int seat = 1;
    std::string name;
    std::string persona;

    bool operator==(const AgentProfile&) const = default;
};

struct Utterance {
    std::string id;
    DebateStage stage = DebateStage::Opening;
    TeamStance team = TeamStance::Affirmative;
    int seat = 1;
    int round = 1;
    std::string speaker;
    std::string content;
    int tokens = 0;

    bool operator==(const Utterance&) const = default;
};

struct StageSummary {
    DebateStage stage = DebateStage::Opening;
    std::string text;
    int budget = 0;
    int tokens = 0;
    std::vector<std::string> source_ids;
    bool lossy = false;

    bool operator==(const StageSummary&) const = default;
};

struct EvidenceQuery {
    std::string phrase;
    QueryOrigin origin = QueryOrigin::Entity;
    int ordinal = 1;

    bool operator==(const EvidenceQuery&) const = default;
};

struct EvidenceItem {
    std::string id;
    int query_ordinal = 1;
    std::string title;
    std::string snippet;
    std::string locator;
    int rank = 1;
    Stance stance = Stance::Neutral;
    bool low_confidence = false;

    bool operator==(const EvidenceItem&) const = default;
};

struct EvidencePool {
    std::vector<EvidenceItem> supporting;
    std::vector<EvidenceItem> refuting;
    std::vector<EvidenceItem> neutral;
    std::string retrieved_at;
    int total_fetched = 0;

    std::size_t size() const noexcept { return supporting.size() + refuting.size() + neutral.size(); }
    bool operator==(const EvidencePool&) const = default;
};

struct DimensionScore {
    Dimension dimension = Dimension::Factuality;
    int affirmative = 0;
    int negative = 0;
    std::string rationale;

    bool operator==(const DimensionScore&) const = default;
};

struct JudgeBallot {
    int judge = 1;
    std::vector<DimensionScore> scores;

    bool operator==(const JudgeBallot&) const = default;
};

struct DebateSummary {
    std::string key_arguments_affirmative;
    std::string key_arguments_negative;
    std::string evidence_based_rebuttals;
    std::string controversial_points;
    bool mechanical = false;

    bool operator==(const DebateSummary&) const = default;
};

struct Verdict {
    Label label = Label::Real;
    int affirmative_total = 0;
    int negative_total = 0;
    int margin = 0;
    DebateSummary summary;

    bool operator==(const Verdict&) const = default;
};

void to_json(nlohmann::json& j, Label v);
void from_json(const nlohmann::json& j, Label& v);
void to_json(nlohmann::json& j, TeamStance v);
void from_json(const nlohmann::json& j, TeamStance& v);
void to_json(nlohmann::json& j, DebateStage v);
void from_json(const nlohmann::json& j, DebateStage& v);
void to_json(nlohmann::json& j, Stance v);
void from_json(const nlohmann::json& j, Stance& v);
void to_json(nlohmann::json& j, QueryOrigin v);
void from_json(const nlohmann::json& j, QueryOrigin& v);
void to_json(nlohmann::json& j, Dimension v);
void from_json(const nlohmann::json& j, Dimension& v);

void to_json(nlohmann::json& j, const Claim& v);
void from_json(const nlohmann::json& j, Claim& v);
void to_json(nlohmann::json& j, const AgentProfile& v);
void from_json(const nlohmann::json& j, AgentProfile& v);
void to_json(nlohmann::json& j, const Utterance& v);
void from_json(const nlohmann::json& j, Utterance& v);
void to_json(nlohmann::json& j, const StageSummary& v);
void from_json(const nlohmann::json& j, StageSummary& v);
void to_json(nlohmann::json& j, const EvidenceQuery& v);
void from_json(const nlohmann::json& j, EvidenceQuery& v);
void to_json(nlohmann::json& j, const EvidenceItem& v);
void from_json(const nlohmann::json& j, EvidenceItem& v);
void to_json(nlohmann::json& j, const EvidencePool& v);
void from_json(const nlohmann::json& j, EvidencePool& v);
void to_json(nlohmann::json& j, const DimensionScore& v);
void from_json(const nlohmann::json& j, DimensionScore& v);
void to_json(nlohmann::json& j, const JudgeBallot& v);
void from_json(const nlohmann::json& j, JudgeBallot& v);
void to_json(nlohmann::json& j, const DebateSummary& v);
void from_json(const nlohmann::json& j, DebateSummary& v);
void to_json(nlohmann::json& j, const Verdict& v);
void from_json(const nlohmann::json& j, Verdict& v);

}  // namespace ed2d
