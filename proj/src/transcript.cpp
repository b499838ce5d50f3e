#include "ed2d/transcript.hpp"

#include <sstream>

#include "ed2d/error.hpp"
#include "ed2d/types.hpp"

namespace ed2d {

namespace {

std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::string team_title(const std::string& team) { return team == "affirmative" ? "Affirmative" : "Negative"; }

std::string stage_title(const std::string& stage) {
    if (auto s = parse_stage(stage)) return std::string(title(*s));
    return stage;
}

void render_evidence_list(std::ostringstream& os, const nlohmann::json& items, const char* stance) {
    for (const auto& item : items) {
        os << "  [" << item.value("id", "") << "] " << stance;
        if (item.value("low_confidence", false)) os << " (low confidence)";
        os << ": " << item.value("title", "");
        if (const auto loc = item.value("locator", std::string{}); !loc.empty()) os << " <" << loc << ">";
        os << "\n";
    }
}

}  // namespace

std::string render_transcript(const nlohmann::json& r) {
    if (!r.is_object() || !r.contains("claim") || !r.contains("utterances")) {
        throw Error(ErrorKind::Validation, "not a debate record document");
    }
    std::ostringstream os;
    os << "Debate transcript (format v" << kTranscriptFormatVersion << ")\n";
    os << "Claim: " << r["claim"].value("text", "") << "\n";
    if (const auto domain = r.value("domain", std::string{}); !domain.empty()) os << "Domain: " << domain << "\n";

    const auto& profiles = r.value("profiles", nlohmann::json::array());
    for (const char* team : {"affirmative", "negative"}) {
        bool any = false;
        for (const auto& p : profiles) {
            if (p.value("team", "") != team) continue;
            if (!any) os << "\n" << team_title(team) << " team:\n";
            any = true;
            os << "  " << p.value("seat", 0) << ". " << p.value("name", "") << ": " << p.value("persona", "") << "\n";
        }
    }

    const auto& utterances = r["utterances"];
    const auto& summaries = r.value("summaries", nlohmann::json::array());
    for (auto stage : kAllStages) {
        const std::string key(to_string(stage));
        os << "\n== " << title(stage) << " ==\n";
        if (stage == DebateStage::Judgment) break;

        if (stage == DebateStage::FreeDebate) {
            if (const auto& ev = r.value("evidence", nlohmann::json()); ev.is_object()) {
                os << "Evidence: " << ev.value("supporting", nlohmann::json::array()).size() << " supporting, "
                   << ev.value("refuting", nlohmann::json::array()).size() << " refuting, "
                   << ev.value("neutral", nlohmann::json::array()).size() << " neutral\n";
                render_evidence_list(os, ev.value("supporting", nlohmann::json::array()), "supporting");
                render_evidence_list(os, ev.value("refuting", nlohmann::json::array()), "refuting");
                render_evidence_list(os, ev.value("neutral", nlohmann::json::array()), "neutral");
                os << "\n";
            }
        }
        bool spoken = false;
        int shown_round = 0;
        for (const auto& u : utterances) {
            if (u.value("stage", "") != key) continue;
            spoken = true;
            if (stage == DebateStage::FreeDebate && u.value("round", 1) != shown_round) {
                shown_round = u.value("round", 1);
                os << "-- Round " << shown_round << " --\n";
            }
            os << "[" << team_title(u.value("team", "")) << " " << u.value("seat", 0) << " | " << u.value("speaker", "")
               << "]\n"
               << u.value("content", "") << "\n\n";
        }
        if (!spoken) os << "(not reached)\n";
        for (const auto& s : summaries) {
            if (s.value("stage", "") != key) continue;
            os << "Stage summary" << (s.value("lossy", false) ? " (truncated)" : "") << ":\n"
               << s.value("text", "") << "\n";
        }
    }

    const auto& ballots = r.value("ballots", nlohmann::json::array());
    for (const auto& b : ballots) {
        int aff = 0, neg = 0;
        std::ostringstream dims;
        for (const auto& s : b.value("scores", nlohmann::json::array())) {
            aff += s.value("affirmative", 0);
            neg += s.value("negative", 0);
            dims << "  " << s.value("dimension", "") << ": " << s.value("affirmative", 0) << "-" << s.value("negative", 0)
                 << "\n";
        }
        os << "Judge " << b.value("judge", 0) << ": affirmative " << aff << ", negative " << neg << "\n" << dims.str();
    }
    if (ballots.empty()) os << "(no ballots)\n";

    os << "\n";
    const auto& verdict = r.value("verdict", nlohmann::json());
    if (verdict.is_object()) {
        os << "Verdict: " << upper(verdict.value("label", "")) << " (affirmative " << verdict.value("affirmative_total", 0)
           << ", negative " << verdict.value("negative_total", 0) << ", margin " << verdict.value("margin", 0) << ")\n";
        const auto& sm = verdict.value("summary", nlohmann::json::object());
        if (sm.value("mechanical", false)) os << "(summary assembled from stage summaries)\n";
        os << "Key arguments (affirmative): " << sm.value("key_arguments_affirmative", "") << "\n"
           << "Key arguments (negative): " << sm.value("key_arguments_negative", "") << "\n"
           << "Evidence-based rebuttals: " << sm.value("evidence_based_rebuttals", "") << "\n"
           << "Controversial points: " << sm.value("controversial_points", "") << "\n";
    } else if (const auto& f = r.value("failure", nlohmann::json()); f.is_object()) {
        const auto stage = f.value("stage", "");
        os << "No verdict: failed at " << (stage == "setup" ? stage : stage_title(stage)) << " (" << f.value("kind", "")
           << "): " << f.value("reason", "") << "\n";
    } else {
        os << "No verdict.\n";
    }
    return os.str();
}

std::string render_prediction(const nlohmann::json& p) {
    std::ostringstream os;
    os << "Strategy: " << p.value("strategy", "") << "\n";
    os << "Claim id: " << p.value("claim_id", "") << "\n";
    for (const auto& step : p.value("trace", nlohmann::json::array())) {
        os << "\n[" << step.value("tag", "") << "]\n" << step.value("content", "") << "\n";
    }
    const auto& usage = p.value("usage", nlohmann::json::object());
    os << "\nModel calls: " << usage.value("calls", 0) << "\n";
    if (const auto& flags = p.value("flags", nlohmann::json::array()); !flags.empty()) {
        os << "Flags:";
        for (const auto& f : flags) os << " " << f.get<std::string>();
        os << "\n";
    }
    os << "Verdict: " << upper(p.value("label", "")) << "\n";
    return os.str();
}

}  // namespace ed2d
