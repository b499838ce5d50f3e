#include "prompts.hpp"

#include <sstream>

namespace ed2d::prompts {

namespace {

std::string claim_line(const Claim& claim) { return "Claim: \"" + claim.text + "\""; }

std::string team_side(TeamStance team) {
    return team == TeamStance::Affirmative ? "the claim is TRUE (real news)" : "the claim is FAKE (misinformation)";
}

}  // namespace

std::string render_evidence(std::span<const EvidenceItem> items) {
    std::ostringstream os;
    for (const auto& e : items) {
        os << "[" << e.id << "] " << e.title << ": " << e.snippet << "\n";
    }
    return os.str();
}

std::string render_summaries(std::span<const StageSummary> summaries) {
    std::ostringstream os;
    for (const auto& s : summaries) {
        os << "[" << title(s.stage) << " summary] " << s.text << "\n";
    }
    return os.str();
}

std::string render_utterances(std::span<const Utterance> utterances) {
    std::ostringstream os;
    for (const auto& u : utterances) {
        os << "[" << (u.team == TeamStance::Affirmative ? "Affirmative" : "Negative") << " " << u.seat << " - "
           << u.speaker << "] " << u.content << "\n";
    }
    return os.str();
}

std::string domain_system() {
    return "You classify news claims by subject domain. Reply with a short domain label of one to four words "
           "(for example: public health, politics, science & environment) and nothing else.";
}

std::string domain_user(const Claim& claim) { return claim_line(claim) + "\nDomain:"; }

std::string profiles_system() {
    return "You prepare a structured fact-checking debate. Two teams of four debaters argue over a claim: the "
           "affirmative team argues the claim is true, the negative team argues it is fake. Create one expert "
           "profile per debater. Every persona must be grounded in the given domain and relevant to the claim. "
           "Reply only with JSON of the form {\"affirmative\": [{\"name\": \"...\", \"persona\": \"...\"} x4], "
           "\"negative\": [{\"name\": \"...\", \"persona\": \"...\"} x4]}. " +
           std::string(kLanguageRule);
}

std::string profiles_user(const Claim& claim, const std::string& domain) {
    return claim_line(claim) + "\nDomain: " + domain + "\nCreate exactly four profiles per team.";
}

std::string debater_system(const AgentProfile& speaker, const std::string& domain) {
    std::ostringstream os;
    os << "You are " << speaker.name << ", debater " << speaker.seat << " of the "
       << (speaker.team == TeamStance::Affirmative ? "affirmative" : "negative") << " team in a debate about a "
       << domain << " claim.\nPersona: " << speaker.persona << "\nYour team's fixed position: "
       << team_side(speaker.team)
       << ". Never concede this position. Be specific, cite evidence when it is provided, and keep to the point. "
       << kLanguageRule;
    return os.str();
}

std::string stage_instruction(DebateStage stage, TeamStance team, int round, int total_rounds, bool has_evidence) {
    std::ostringstream os;
    switch (stage) {
        case DebateStage::Opening:
            os << "Deliver your team's opening statement: state your position and your strongest arguments.";
            break;
        case DebateStage::Rebuttal:
            os << "Deliver your team's rebuttal: answer the opposing team's opening arguments directly.";
            break;
        case DebateStage::FreeDebate:
            os << "Free debate, round " << round << " of " << total_rounds
               << ": engage the other team's latest points and press your strongest case.";
            if (has_evidence) {
                os << " Ground your arguments in the retrieved evidence above and cite it by its [id].";
            }
            break;
        case DebateStage::Closing:
            os << "Deliver your team's closing statement: summarise why "
               << (team == TeamStance::Affirmative ? "the claim is true." : "the claim is fake.");
            break;
        case DebateStage::Judgment:
            break;
    }
    return os.str();
}

std::string compression_system() {
    return "You maintain the shared memory of a structured debate. Distil a completed debate stage into a concise "
           "summary that keeps every salient argument, piece of evidence, and point of contention from both teams. "
           "Reply with the summary text only. " +
           std::string(kLanguageRule);
}

std::string compression_user(const Claim& claim, DebateStage stage, std::span<const Utterance> utterances,
                             int budget, bool tighter) {
    std::ostringstream os;
    os << claim_line(claim) << "\nStage: " << title(stage) << "\n" << render_utterances(utterances)
       << "\nSummarise this stage in at most " << budget << " tokens.";
    if (tighter) os << " Your previous summary was too long: be strictly shorter, keep only the key points.";
    return os.str();
}

std::string extraction_system() {
    return "You prepare encyclopedia look-ups for fact-checking. From a claim, identify up to five salient entities, "
           "concepts, or relations worth looking up. Reply only with JSON of the form {\"queries\": [{\"phrase\": "
           "\"...\", \"type\": \"entity\" | \"relation\" | \"concept\"}]}, most important first.\n"
           "Example: claim \"Flushing a toilet with the lid open sprays germs across the bathroom\" -> "
           "{\"queries\": [{\"phrase\": \"toilet plume\", \"type\": \"concept\"}, {\"phrase\": \"bioaerosol\", "
           "\"type\": \"concept\"}, {\"phrase\": \"toilet\", \"type\": \"entity\"}]}";
}

std::string extraction_user(const Claim& claim) { return claim_line(claim); }

std::string stance_system() {
    return "You assess evidence for fact-checking. Decide whether an evidence passage supports the claim, refutes "
           "it, or is neutral (related but neither). Reply only with JSON of the form {\"stance\": \"supporting\" | "
           "\"refuting\" | \"neutral\"}.";
}

std::string stance_user(const Claim& claim, const EvidenceItem& item) {
    return claim_line(claim) + "\nEvidence (" + item.title + "): " + item.snippet;
}

std::string judge_system() {
    return "You are an impartial judge of a structured debate on whether a news claim is real or fake. The "
           "affirmative team argued the claim is true; the negative team argued it is fake. Score the debate on "
           "five dimensions: factuality, source reliability, reasoning quality, clarity, and ethical "
           "considerations. For each dimension split exactly 7 points between the teams as two integers "
           "(affirmative + negative = 7), and give a one-sentence rationale.";
}

std::string judge_user_head(const Claim& claim) { return claim_line(claim) + "\n"; }

std::string judge_user_tail() {
    return "\nReply only with JSON of the form {\"factuality\": {\"affirmative\": a, \"negative\": 7 - a, "
           "\"rationale\": \"...\"}, \"source_reliability\": {...}, \"reasoning_quality\": {...}, \"clarity\": "
           "{...}, \"ethical_considerations\": {...}} with integer points.";
}

std::string summary_system() {
    return "You write the public debunking summary of a finished fact-checking debate. Reply only with JSON of the "
           "form {\"key_arguments_affirmative\": \"...\", \"key_arguments_negative\": \"...\", "
           "\"evidence_based_rebuttals\": \"...\", \"controversial_points\": \"...\"}; every section must be "
           "non-empty. " +
           std::string(kLanguageRule);
}

std::string summary_user(const Claim& claim, Label label, int affirmative_total, int negative_total) {
    std::ostringstream os;
    os << claim_line(claim) << "\nThe judges ruled the claim " << (label == Label::Real ? "REAL" : "FAKE")
       << " (affirmative " << affirmative_total << " vs negative " << negative_total << " points).";
    return os.str();
}

std::string verdict_system() {
    return "You are a fact-checker deciding whether a news claim is real or fake.";
}

std::string with_evidence_block(std::span<const EvidenceItem> items) {
    if (items.empty()) return {};
    return "Retrieved evidence:\n" + render_evidence(items);
}

std::string zero_shot_user(const Claim& claim, const std::string& evidence_block) {
    return (evidence_block.empty() ? "" : evidence_block + "\n") + claim_line(claim) +
           "\nIs this claim real or fake? Reply only with JSON {\"label\": \"real\" | \"fake\"}.";
}

std::string cot_user(const Claim& claim, const std::string& evidence_block) {
    return (evidence_block.empty() ? "" : evidence_block + "\n") + claim_line(claim) +
           "\nThink step by step about whether this claim is real or fake, then give your final answer. Reply only "
           "with JSON {\"reasoning\": \"<your step-by-step reasoning>\", \"label\": \"real\" | \"fake\"}.";
}

std::string reflect_critique_user(const Claim& claim, const std::string& previous_answer) {
    return claim_line(claim) + "\nA previous assessment said:\n" + previous_answer +
           "\nCritique this assessment: point out factual errors, weak reasoning, or overlooked considerations.";
}

std::string reflect_revision_user(const Claim& claim, const std::string& previous_answer,
                                  const std::string& critique) {
    return claim_line(claim) + "\nPrevious assessment:\n" + previous_answer + "\nCritique:\n" + critique +
           "\nRevise the assessment in light of the critique. Reply only with JSON {\"reasoning\": \"...\", "
           "\"label\": \"real\" | \"fake\"}.";
}

std::string smad_debater_system(bool pro) {
    return std::string("You are debating whether a news claim is real. You argue that ") +
           (pro ? "the claim is TRUE." : "the claim is FAKE.") + " Be concise and specific.";
}

std::string smad_turn_user(const Claim& claim, const std::string& transcript, const std::string& evidence_block,
                           bool pro, int turn) {
    std::ostringstream os;
    if (!evidence_block.empty()) os << evidence_block << "\n";
    os << claim_line(claim) << "\n";
    if (!transcript.empty()) os << "Debate so far:\n" << transcript << "\n";
    os << "Turn " << turn << " of 4: give your " << (turn <= 2 ? "argument" : "response") << " for the "
       << (pro ? "TRUE" : "FAKE") << " side.";
    return os.str();
}

std::string smad_judge_user(const Claim& claim, const std::string& transcript, const std::string& evidence_block) {
    return (evidence_block.empty() ? "" : evidence_block + "\n") + claim_line(claim) + "\nDebate:\n" + transcript +
           "\nBased on the debate, is the claim real or fake? Reply only with JSON {\"label\": \"real\" | \"fake\"}.";
}

}  // namespace ed2d::prompts
