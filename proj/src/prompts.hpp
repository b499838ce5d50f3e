#pragma once

// Prompt templates for every model call. Kept in one place so wording changes
// never touch orchestration logic. No template may render a claim's gold label.

#include <span>
#include <string>
#include <vector>

#include "ed2d/types.hpp"

namespace ed2d::prompts {

inline constexpr const char* kLanguageRule =
    "Always write in the same language as the claim.";

std::string render_evidence(std::span<const EvidenceItem> items);
std::string render_summaries(std::span<const StageSummary> summaries);
std::string render_utterances(std::span<const Utterance> utterances);

// Domain inference and profiles.
std::string domain_system();
std::string domain_user(const Claim& claim);
std::string profiles_system();
std::string profiles_user(const Claim& claim, const std::string& domain);

// Debaters.
std::string debater_system(const AgentProfile& speaker, const std::string& domain);
std::string stage_instruction(DebateStage stage, TeamStance team, int round, int total_rounds, bool has_evidence);

// Compression.
std::string compression_system();
std::string compression_user(const Claim& claim, DebateStage stage, std::span<const Utterance> utterances,
                             int budget, bool tighter);

// Evidence.
std::string extraction_system();
std::string extraction_user(const Claim& claim);
std::string stance_system();
std::string stance_user(const Claim& claim, const EvidenceItem& item);

// Judgment.
std::string judge_system();
std::string judge_user_head(const Claim& claim);
std::string judge_user_tail();
std::string summary_system();
std::string summary_user(const Claim& claim, Label label, int affirmative_total, int negative_total);

// Baselines.
std::string verdict_system();
std::string with_evidence_block(std::span<const EvidenceItem> items);
std::string zero_shot_user(const Claim& claim, const std::string& evidence_block);
std::string cot_user(const Claim& claim, const std::string& evidence_block);
std::string reflect_critique_user(const Claim& claim, const std::string& previous_answer);
std::string reflect_revision_user(const Claim& claim, const std::string& previous_answer, const std::string& critique);
std::string smad_debater_system(bool pro);
std::string smad_turn_user(const Claim& claim, const std::string& transcript, const std::string& evidence_block,
                           bool pro, int turn);
std::string smad_judge_user(const Claim& claim, const std::string& transcript, const std::string& evidence_block);

}  // namespace ed2d::prompts
