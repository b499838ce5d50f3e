#include "ed2d/types.hpp"

#include <algorithm>

#include "ed2d/error.hpp"
#include "ed2d/text.hpp"

namespace ed2d {

std::string_view to_string(Label v) noexcept { return v == Label::Real ? "real" : "fake"; }

std::string_view to_string(TeamStance v) noexcept {
    return v == TeamStance::Affirmative ? "affirmative" : "negative";
}

std::string_view to_string(DebateStage v) noexcept {
    switch (v) {
        case DebateStage::Opening: return "opening";
        case DebateStage::Rebuttal: return "rebuttal";
        case DebateStage::FreeDebate: return "free_debate";
        case DebateStage::Closing: return "closing";
        case DebateStage::Judgment: return "judgment";
    }
    return "opening";
}

std::string_view to_string(Stance v) noexcept {
    switch (v) {
        case Stance::Supporting: return "supporting";
        case Stance::Refuting: return "refuting";
        case Stance::Neutral: return "neutral";
    }
    return "neutral";
}

std::string_view to_string(QueryOrigin v) noexcept {
    switch (v) {
        case QueryOrigin::Entity: return "entity";
        case QueryOrigin::Relation: return "relation";
        case QueryOrigin::Concept: return "concept";
    }
    return "entity";
}

std::string_view to_string(Dimension v) noexcept {
    switch (v) {
        case Dimension::Factuality: return "factuality";
        case Dimension::SourceReliability: return "source_reliability";
        case Dimension::ReasoningQuality: return "reasoning_quality";
        case Dimension::Clarity: return "clarity";
        case Dimension::EthicalConsiderations: return "ethical_considerations";
    }
    return "factuality";
}

std::string_view title(DebateStage v) noexcept {
    switch (v) {
        case DebateStage::Opening: return "Opening";
        case DebateStage::Rebuttal: return "Rebuttal";
        case DebateStage::FreeDebate: return "Free Debate";
        case DebateStage::Closing: return "Closing";
        case DebateStage::Judgment: return "Judgment";
    }
    return "";
}

std::string_view title(Dimension v) noexcept {
    switch (v) {
        case Dimension::Factuality: return "Factuality";
        case Dimension::SourceReliability: return "Source Reliability";
        case Dimension::ReasoningQuality: return "Reasoning Quality";
        case Dimension::Clarity: return "Clarity";
        case Dimension::EthicalConsiderations: return "Ethical Considerations";
    }
    return "";
}

namespace {

// Lowercase, and treat spaces/hyphens as underscores.
std::string canonical(std::string_view s) {
    auto out = text::to_lower(text::trim(s));
    std::replace_if(out.begin(), out.end(), [](char c) { return c == ' ' || c == '-'; }, '_');
    return out;
}

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view s, const std::array<Enum, N>& all) {
    const auto key = canonical(s);
    for (auto v : all) {
        if (to_string(v) == key) return v;
    }
    return std::nullopt;
}

template <typename Enum>
Enum require(const nlohmann::json& j, std::optional<Enum> (*parse)(std::string_view), const char* what) {
    if (!j.is_string()) throw Error(ErrorKind::Validation, std::string("expected ") + what + " string");
    auto v = parse(j.get<std::string>());
    if (!v) throw Error(ErrorKind::Validation, std::string("unknown ") + what + " '" + j.get<std::string>() + "'");
    return *v;
}

}  // namespace

std::optional<Label> parse_label(std::string_view s) {
    return parse_enum(s, std::array{Label::Real, Label::Fake});
}
std::optional<TeamStance> parse_team(std::string_view s) { return parse_enum(s, kTeams); }
std::optional<DebateStage> parse_stage(std::string_view s) {
    if (canonical(s) == "freedebate") return DebateStage::FreeDebate;
    return parse_enum(s, kAllStages);
}
std::optional<Stance> parse_stance(std::string_view s) {
    return parse_enum(s, std::array{Stance::Supporting, Stance::Refuting, Stance::Neutral});
}
std::optional<QueryOrigin> parse_origin(std::string_view s) {
    return parse_enum(s, std::array{QueryOrigin::Entity, QueryOrigin::Relation, QueryOrigin::Concept});
}
std::optional<Dimension> parse_dimension(std::string_view s) { return parse_enum(s, kDimensions); }

void validate_claim(const Claim& claim) {
    if (text::trim(claim.text).empty()) throw Error(ErrorKind::InvalidClaim, "claim text is empty");
}

void to_json(nlohmann::json& j, Label v) { j = to_string(v); }
void from_json(const nlohmann::json& j, Label& v) { v = require(j, &parse_label, "label"); }
void to_json(nlohmann::json& j, TeamStance v) { j = to_string(v); }
void from_json(const nlohmann::json& j, TeamStance& v) { v = require(j, &parse_team, "team"); }
void to_json(nlohmann::json& j, DebateStage v) { j = to_string(v); }
void from_json(const nlohmann::json& j, DebateStage& v) { v = require(j, &parse_stage, "stage"); }
void to_json(nlohmann::json& j, Stance v) { j = to_string(v); }
void from_json(const nlohmann::json& j, Stance& v) { v = require(j, &parse_stance, "stance"); }
void to_json(nlohmann::json& j, QueryOrigin v) { j = to_string(v); }
void from_json(const nlohmann::json& j, QueryOrigin& v) { v = require(j, &parse_origin, "origin"); }
void to_json(nlohmann::json& j, Dimension v) { j = to_string(v); }
void from_json(const nlohmann::json& j, Dimension& v) { v = require(j, &parse_dimension, "dimension"); }

void to_json(nlohmann::json& j, const Claim& v) {
    j = {{"id", v.id}, {"text", v.text}};
    if (v.language) j["language"] = *v.language;
    if (v.gold_label) j["gold_label"] = *v.gold_label;
    if (!v.metadata.empty()) j["metadata"] = v.metadata;
}

void from_json(const nlohmann::json& j, Claim& v) {
    v.id = j.at("id").get<std::string>();
    v.text = j.at("text").get<std::string>();
    v.language = j.contains("language") ? std::optional(j["language"].get<std::string>()) : std::nullopt;
    v.gold_label = j.contains("gold_label") ? std::optional(j["gold_label"].get<Label>()) : std::nullopt;
    v.metadata = j.value("metadata", std::map<std::string, std::string>{});
}

void to_json(nlohmann::json& j, const AgentProfile& v) {
    j = {{"team", v.team}, {"seat", v.seat}, {"name", v.name}, {"persona", v.persona}};
}

void from_json(const nlohmann::json& j, AgentProfile& v) {
    v.team = j.at("team").get<TeamStance>();
    v.seat = j.at("seat").get<int>();
    v.name = j.at("name").get<std::string>();
    v.persona = j.at("persona").get<std::string>();
}

void to_json(nlohmann::json& j, const Utterance& v) {
    j = {{"id", v.id},           {"stage", v.stage},     {"team", v.team},       {"seat", v.seat},
         {"round", v.round},     {"speaker", v.speaker}, {"content", v.content}, {"tokens", v.tokens}};
}

void from_json(const nlohmann::json& j, Utterance& v) {
    v.id = j.at("id").get<std::string>();
    v.stage = j.at("stage").get<DebateStage>();
    v.team = j.at("team").get<TeamStance>();
    v.seat = j.at("seat").get<int>();
    v.round = j.at("round").get<int>();
    v.speaker = j.at("speaker").get<std::string>();
    v.content = j.at("content").get<std::string>();
    v.tokens = j.at("tokens").get<int>();
}

void to_json(nlohmann::json& j, const StageSummary& v) {
    j = {{"stage", v.stage},   {"text", v.text},        {"budget", v.budget},
         {"tokens", v.tokens}, {"source_ids", v.source_ids}, {"lossy", v.lossy}};
}

void from_json(const nlohmann::json& j, StageSummary& v) {
    v.stage = j.at("stage").get<DebateStage>();
    v.text = j.at("text").get<std::string>();
    v.budget = j.at("budget").get<int>();
    v.tokens = j.at("tokens").get<int>();
    v.source_ids = j.at("source_ids").get<std::vector<std::string>>();
    v.lossy = j.value("lossy", false);
}

void to_json(nlohmann::json& j, const EvidenceQuery& v) {
    j = {{"phrase", v.phrase}, {"origin", v.origin}, {"ordinal", v.ordinal}};
}

void from_json(const nlohmann::json& j, EvidenceQuery& v) {
    v.phrase = j.at("phrase").get<std::string>();
    v.origin = j.at("origin").get<QueryOrigin>();
    v.ordinal = j.at("ordinal").get<int>();
}

void to_json(nlohmann::json& j, const EvidenceItem& v) {
    j = {{"id", v.id},         {"query_ordinal", v.query_ordinal}, {"title", v.title},
         {"snippet", v.snippet}, {"locator", v.locator},           {"rank", v.rank},
         {"stance", v.stance}, {"low_confidence", v.low_confidence}};
}

void from_json(const nlohmann::json& j, EvidenceItem& v) {
    v.id = j.at("id").get<std::string>();
    v.query_ordinal = j.at("query_ordinal").get<int>();
    v.title = j.at("title").get<std::string>();
    v.snippet = j.at("snippet").get<std::string>();
    v.locator = j.at("locator").get<std::string>();
    v.rank = j.at("rank").get<int>();
    v.stance = j.at("stance").get<Stance>();
    v.low_confidence = j.value("low_confidence", false);
}

void to_json(nlohmann::json& j, const EvidencePool& v) {
    j = {{"supporting", v.supporting},
         {"refuting", v.refuting},
         {"neutral", v.neutral},
         {"retrieved_at", v.retrieved_at},
         {"total_fetched", v.total_fetched}};
}

void from_json(const nlohmann::json& j, EvidencePool& v) {
    v.supporting = j.at("supporting").get<std::vector<EvidenceItem>>();
    v.refuting = j.at("refuting").get<std::vector<EvidenceItem>>();
    v.neutral = j.at("neutral").get<std::vector<EvidenceItem>>();
    v.retrieved_at = j.value("retrieved_at", std::string{});
    v.total_fetched = j.value("total_fetched", 0);
}

void to_json(nlohmann::json& j, const DimensionScore& v) {
    j = {{"dimension", v.dimension},
         {"affirmative", v.affirmative},
         {"negative", v.negative},
         {"rationale", v.rationale}};
}

void from_json(const nlohmann::json& j, DimensionScore& v) {
    v.dimension = j.at("dimension").get<Dimension>();
    v.affirmative = j.at("affirmative").get<int>();
    v.negative = j.at("negative").get<int>();
    v.rationale = j.value("rationale", std::string{});
}

void to_json(nlohmann::json& j, const JudgeBallot& v) { j = {{"judge", v.judge}, {"scores", v.scores}}; }

void from_json(const nlohmann::json& j, JudgeBallot& v) {
    v.judge = j.at("judge").get<int>();
    v.scores = j.at("scores").get<std::vector<DimensionScore>>();
}

void to_json(nlohmann::json& j, const DebateSummary& v) {
    j = {{"key_arguments_affirmative", v.key_arguments_affirmative},
         {"key_arguments_negative", v.key_arguments_negative},
         {"evidence_based_rebuttals", v.evidence_based_rebuttals},
         {"controversial_points", v.controversial_points},
         {"mechanical", v.mechanical}};
}

void from_json(const nlohmann::json& j, DebateSummary& v) {
    v.key_arguments_affirmative = j.at("key_arguments_affirmative").get<std::string>();
    v.key_arguments_negative = j.at("key_arguments_negative").get<std::string>();
    v.evidence_based_rebuttals = j.at("evidence_based_rebuttals").get<std::string>();
    v.controversial_points = j.at("controversial_points").get<std::string>();
    v.mechanical = j.value("mechanical", false);
}

void to_json(nlohmann::json& j, const Verdict& v) {
    j = {{"label", v.label},
         {"affirmative_total", v.affirmative_total},
         {"negative_total", v.negative_total},
         {"margin", v.margin},
         {"summary", v.summary}};
}

void from_json(const nlohmann::json& j, Verdict& v) {
    v.label = j.at("label").get<Label>();
    v.affirmative_total = j.at("affirmative_total").get<int>();
    v.negative_total = j.at("negative_total").get<int>();
    v.margin = j.at("margin").get<int>();
    v.summary = j.at("summary").get<DebateSummary>();
}

}  // namespace ed2d
