#include "ed2d/judgment.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <sstream>

#include "ed2d/error.hpp"
#include "ed2d/text.hpp"
#include "prompts.hpp"

namespace ed2d {

std::vector<std::string> validate_ballot(const JudgeBallot& ballot) {
    std::vector<std::string> violations;
    std::array<int, kDimensions.size()> seen{};
    for (const auto& s : ballot.scores) {
        const auto name = std::string(to_string(s.dimension));
        const auto idx = static_cast<std::size_t>(dimension_index(s.dimension));
        if (idx >= seen.size()) {
            violations.push_back("unknown dimension");
            continue;
        }
        if (++seen[idx] == 2) violations.push_back(name + ": duplicate-dimension");
        if (s.affirmative < 0 || s.affirmative > kPointsPerDimension || s.negative < 0 ||
            s.negative > kPointsPerDimension) {
            violations.push_back(name + ": points outside 0..7 (" + std::to_string(s.affirmative) + ", " +
                                 std::to_string(s.negative) + ")");
        }
        if (s.affirmative + s.negative != kPointsPerDimension) {
            violations.push_back(name + ": sum " + std::to_string(s.affirmative + s.negative) + " != 7");
        }
    }
    for (auto d : kDimensions) {
        if (seen[static_cast<std::size_t>(dimension_index(d))] == 0) {
            violations.push_back(std::string(to_string(d)) + ": missing-dimension");
        }
    }
    return violations;
}

Tally aggregate(std::span<const JudgeBallot> ballots) {
    if (ballots.empty() || ballots.size() % 2 == 0) {
        throw Error(ErrorKind::InvalidPanel, "panel must hold an odd number of ballots, got " +
                                                 std::to_string(ballots.size()));
    }
    Tally t;
    for (const auto& b : ballots) {
        if (auto v = validate_ballot(b); !v.empty()) {
            throw Error(ErrorKind::JudgmentFailed, "ballot of judge " + std::to_string(b.judge) + " is invalid", v);
        }
        for (const auto& s : b.scores) {
            t.affirmative_total += s.affirmative;
            t.negative_total += s.negative;
        }
    }
    // Unreachable for valid odd panels: the grand total 35 * panel is odd.
    if (t.affirmative_total == t.negative_total) throw Error(ErrorKind::JudgmentFailed, "tied totals");
    t.label = t.affirmative_total > t.negative_total ? Label::Real : Label::Fake;
    t.margin = std::abs(t.affirmative_total - t.negative_total);
    return t;
}

const Shape& ballot_shape() {
    static const Shape shape = [] {
        std::vector<Shape::Field> dims;
        for (auto d : kDimensions) {
            dims.push_back(Shape::field(std::string(to_string(d)),
                                        Shape::object({Shape::field("affirmative", Shape::integer(0, 7)),
                                                       Shape::field("negative", Shape::integer(0, 7)),
                                                       Shape::field("rationale", Shape::text(true), false)})));
        }
        return Shape::object(std::move(dims));
    }();
    return shape;
}

JudgeBallot ballot_from_wire(const nlohmann::json& wire, int judge) {
    JudgeBallot ballot;
    ballot.judge = judge;
    for (auto d : kDimensions) {
        auto it = wire.find(std::string(to_string(d)));
        if (it == wire.end() || !it->is_object()) continue;
        DimensionScore s;
        s.dimension = d;
        s.affirmative = it->value("affirmative", -1);
        s.negative = it->value("negative", -1);
        s.rationale = it->value("rationale", std::string{});
        ballot.scores.push_back(std::move(s));
    }
    return ballot;
}

nlohmann::json ballot_to_wire(const JudgeBallot& ballot) {
    nlohmann::json wire = nlohmann::json::object();
    for (const auto& s : ballot.scores) {
        wire[std::string(to_string(s.dimension))] = {
            {"affirmative", s.affirmative}, {"negative", s.negative}, {"rationale", s.rationale}};
    }
    return wire;
}

namespace {

// Claim, stage memory, closing statements and evidence. `reserved` counts the
// tokens of the surrounding instructions. Closing statements are dropped oldest
// first when over budget; summaries and evidence never are.
std::string judge_body(const JudgeContext& context, std::size_t reserved, int context_budget) {
    const auto head = prompts::judge_user_head(*context.claim) + "Debate memory:\n" +
                      prompts::render_summaries(context.summaries);
    const auto evidence = context.evidence.empty() ? std::string{}
                                                   : "\nAll retrieved evidence:\n" +
                                                         prompts::render_evidence(context.evidence);
    const auto budget = static_cast<std::size_t>(context_budget);
    const auto fixed = reserved + text::count_tokens(head) + text::count_tokens(evidence);
    if (fixed > budget) {
        throw Error(ErrorKind::ContextOverflow, "judge context needs " + std::to_string(fixed) +
                                                    " tokens without closing statements, budget " +
                                                    std::to_string(context_budget));
    }
    std::vector<std::size_t> cost;
    std::size_t verbatim = 0;
    for (std::size_t i = 0; i < context.closing.size(); ++i) {
        cost.push_back(text::count_tokens(prompts::render_utterances(context.closing.subspan(i, 1))));
        verbatim += cost.back();
    }
    std::size_t first = 0;
    while (first < cost.size() && fixed + verbatim > budget) verbatim -= cost[first++];
    std::string closing;
    if (first < context.closing.size()) {
        closing = "\nClosing statements:\n" + prompts::render_utterances(context.closing.subspan(first));
    }
    return head + closing + evidence;
}

}  // namespace

std::vector<Message> judge_messages(const JudgeContext& context, int context_budget) {
    const auto system = prompts::judge_system();
    const auto tail = prompts::judge_user_tail();
    const auto body = judge_body(context, text::count_tokens(system) + text::count_tokens(tail), context_budget);
    return {Message{Role::System, system}, Message{Role::User, body + tail}};
}

std::vector<JudgeBallot> collect_ballots(ModelSession& session, const JudgeContext& context, int panel_size,
                                         const DebateConfig& config,
                                         const std::function<void(const JudgeBallot&)>& on_ballot) {
    if (panel_size < 1 || panel_size % 2 == 0) {
        throw Error(ErrorKind::InvalidConfig, "judge panel size must be odd, got " + std::to_string(panel_size));
    }
    ModelRequest request;
    request.messages = judge_messages(context, config.context_budget);
    request.tag = std::string(tag::kJudgeBallot);
    request.temperature = config.temperatures.at(tag::kJudgeBallot);
    request.max_tokens = config.max_response_tokens;

    std::vector<JudgeBallot> ballots;
    for (int judge = 1; judge <= panel_size; ++judge) {
        nlohmann::json wire;
        try {
            wire = session.structured_complete(request, ballot_shape(), [judge](const nlohmann::json& w) {
                return validate_ballot(ballot_from_wire(w, judge));
            });
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::StructuredParseFailure) throw;
            throw Error(ErrorKind::JudgmentFailed, "judge " + std::to_string(judge) + " produced no valid ballot",
                        e.details());
        }
        ballots.push_back(ballot_from_wire(wire, judge));
        if (on_ballot) on_ballot(ballots.back());
    }
    return ballots;
}

const Shape& summary_shape() {
    static const Shape shape = Shape::object({Shape::field("key_arguments_affirmative", Shape::text()),
                                              Shape::field("key_arguments_negative", Shape::text()),
                                              Shape::field("evidence_based_rebuttals", Shape::text()),
                                              Shape::field("controversial_points", Shape::text())});
    return shape;
}

DebateSummary summarize(ModelSession& session, const JudgeContext& context, const Tally& tally,
                        std::span<const Utterance> utterances, std::span<const JudgeBallot> ballots,
                        const DebateConfig& config) {
    const auto system = prompts::summary_system();
    const auto lead = prompts::summary_user(*context.claim, tally.label, tally.affirmative_total,
                                            tally.negative_total) +
                      "\n";
    const auto body = judge_body(context, text::count_tokens(system) + text::count_tokens(lead), config.context_budget);
    ModelRequest request;
    request.messages = {Message{Role::System, system}, Message{Role::User, lead + body}};
    request.tag = std::string(tag::kJudgmentSummary);
    request.temperature = config.temperatures.at(tag::kJudgmentSummary);
    request.max_tokens = config.max_response_tokens;
    try {
        const auto j = session.structured_complete(request, summary_shape());
        DebateSummary s;
        s.key_arguments_affirmative = text::trim(j.at("key_arguments_affirmative").get<std::string>());
        s.key_arguments_negative = text::trim(j.at("key_arguments_negative").get<std::string>());
        s.evidence_based_rebuttals = text::trim(j.at("evidence_based_rebuttals").get<std::string>());
        s.controversial_points = text::trim(j.at("controversial_points").get<std::string>());
        return s;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::StructuredParseFailure) throw;
    }
    return mechanical_summary(context.summaries, utterances, ballots, config.summary_budget);
}

DebateSummary mechanical_summary(std::span<const StageSummary> summaries, std::span<const Utterance> utterances,
                                 std::span<const JudgeBallot> ballots, int section_budget) {
    const auto budget = static_cast<std::size_t>(std::max(section_budget, 1));
    auto side = [&](TeamStance team) {
        std::string out;
        for (const auto& u : utterances) {
            if (u.team != team || (u.stage != DebateStage::Opening && u.stage != DebateStage::Closing)) continue;
            if (!out.empty()) out += "\n";
            out += std::string(title(u.stage)) + ": " + u.content;
        }
        out = text::truncate_tokens(out, budget);
        return out.empty() ? std::string("(no statements recorded)") : out;
    };

    DebateSummary s;
    s.mechanical = true;
    s.key_arguments_affirmative = side(TeamStance::Affirmative);
    s.key_arguments_negative = side(TeamStance::Negative);

    std::string rebuttals;
    for (const auto& sum : summaries) {
        if (sum.stage != DebateStage::Rebuttal && sum.stage != DebateStage::FreeDebate) continue;
        if (!rebuttals.empty()) rebuttals += "\n";
        rebuttals += std::string(title(sum.stage)) + ": " + sum.text;
    }
    s.evidence_based_rebuttals = rebuttals.empty() ? "(no rebuttals recorded)" : rebuttals;

    std::array<std::pair<int, int>, kDimensions.size()> totals{};
    for (const auto& b : ballots) {
        for (const auto& sc : b.scores) {
            auto& t = totals[static_cast<std::size_t>(dimension_index(sc.dimension))];
            t.first += sc.affirmative;
            t.second += sc.negative;
        }
    }
    std::vector<Dimension> order(kDimensions.begin(), kDimensions.end());
    std::stable_sort(order.begin(), order.end(), [&](Dimension a, Dimension b) {
        const auto& ta = totals[static_cast<std::size_t>(dimension_index(a))];
        const auto& tb = totals[static_cast<std::size_t>(dimension_index(b))];
        return std::abs(ta.first - ta.second) < std::abs(tb.first - tb.second);
    });
    std::ostringstream contested;
    contested << "Most contested dimensions:";
    for (std::size_t i = 0; i < 2 && i < order.size(); ++i) {
        const auto& t = totals[static_cast<std::size_t>(dimension_index(order[i]))];
        contested << (i ? ";" : "") << " " << title(order[i]) << " (affirmative " << t.first << " vs negative "
                  << t.second << ")";
    }
    s.controversial_points = contested.str();
    return s;
}

}  // namespace ed2d
