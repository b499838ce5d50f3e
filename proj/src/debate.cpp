#include "ed2d/debate.hpp"

#include <chrono>

#include "ed2d/error.hpp"
#include "ed2d/text.hpp"
#include "prompts.hpp"

namespace ed2d {

void to_json(nlohmann::json& j, const DebateFailure& f) {
    j = {{"stage", f.stage}, {"kind", f.kind}, {"reason", f.reason}};
}

void from_json(const nlohmann::json& j, DebateFailure& f) {
    f.stage = j.at("stage").get<std::string>();
    f.kind = j.at("kind").get<std::string>();
    f.reason = j.at("reason").get<std::string>();
}

void to_json(nlohmann::json& j, const DebateRecord& r) {
    j = {{"schema_version", kRecordSchemaVersion},
         {"claim", r.claim},
         {"domain", r.domain},
         {"profiles", r.profiles},
         {"utterances", r.utterances},
         {"summaries", r.summaries},
         {"evidence_queries", r.evidence_queries},
         {"evidence", r.evidence ? nlohmann::json(*r.evidence) : nlohmann::json(nullptr)},
         {"ballots", r.ballots},
         {"verdict", r.verdict ? nlohmann::json(*r.verdict) : nlohmann::json(nullptr)},
         {"config", r.config},
         {"flags", r.flags},
         {"failure", r.failure ? nlohmann::json(*r.failure) : nlohmann::json(nullptr)},
         {"usage", r.usage},
         {"started_at", r.started_at},
         {"finished_at", r.finished_at},
         {"elapsed_ms", r.elapsed_ms}};
}

void from_json(const nlohmann::json& j, DebateRecord& r) {
    const auto version = j.value("schema_version", 0);
    if (version != kRecordSchemaVersion) {
        throw Error(ErrorKind::Validation, "unsupported record schema version " + std::to_string(version));
    }
    r = DebateRecord{};
    r.claim = j.at("claim").get<Claim>();
    r.domain = j.value("domain", std::string{});
    r.profiles = j.at("profiles").get<std::vector<AgentProfile>>();
    r.utterances = j.at("utterances").get<std::vector<Utterance>>();
    r.summaries = j.at("summaries").get<std::vector<StageSummary>>();
    r.evidence_queries = j.value("evidence_queries", std::vector<EvidenceQuery>{});
    if (const auto& e = j.at("evidence"); !e.is_null()) r.evidence = e.get<EvidencePool>();
    r.ballots = j.at("ballots").get<std::vector<JudgeBallot>>();
    if (const auto& v = j.at("verdict"); !v.is_null()) r.verdict = v.get<Verdict>();
    r.config = j.value("config", DebateConfig{});
    r.flags = j.value("flags", std::vector<std::string>{});
    if (auto f = j.find("failure"); f != j.end() && !f->is_null()) r.failure = f->get<DebateFailure>();
    r.usage = j.value("usage", Usage{});
    r.started_at = j.value("started_at", std::string{});
    r.finished_at = j.value("finished_at", std::string{});
    r.elapsed_ms = j.value("elapsed_ms", 0.0);
}

nlohmann::json strip_timing(nlohmann::json doc) {
    doc.erase("started_at");
    doc.erase("finished_at");
    doc.erase("elapsed_ms");
    if (auto e = doc.find("evidence"); e != doc.end() && e->is_object()) e->erase("retrieved_at");
    return doc;
}

nlohmann::json canonical_json(const DebateRecord& record) { return strip_timing(nlohmann::json(record)); }

// ---------------------------------------------------------------------------

DomainResult infer_domain(ModelSession& session, const Claim& claim, const DebateConfig& config) {
    validate_claim(claim);
    ModelRequest request;
    request.messages = {Message{Role::System, prompts::domain_system()},
                        Message{Role::User, prompts::domain_user(claim)}};
    request.tag = std::string(tag::kDomainInference);
    request.temperature = config.temperatures.at(tag::kDomainInference);
    request.max_tokens = std::min(config.max_response_tokens, 32);
    const auto response = session.complete(std::move(request));

    auto label = text::trim(response.content);
    label = text::trim(label.substr(0, label.find('\n')));
    while (!label.empty() && (label.front() == '"' || label.front() == '\'')) label.erase(0, 1);
    while (!label.empty() && (label.back() == '"' || label.back() == '\'' || label.back() == '.')) label.pop_back();
    if (label.empty()) return DomainResult{"general", true};
    return DomainResult{label, false};
}

std::vector<AgentProfile> generate_profiles(ModelSession& session, const Claim& claim, const std::string& domain,
                                            const DebateConfig& config) {
    static const Shape shape = [] {
        auto team = Shape::list_of(
            Shape::object({Shape::field("name", Shape::text()), Shape::field("persona", Shape::text())}),
            kSeatsPerTeam, kSeatsPerTeam);
        return Shape::object({Shape::field("affirmative", team), Shape::field("negative", team)});
    }();

    ModelRequest request;
    request.messages = {Message{Role::System, prompts::profiles_system()},
                        Message{Role::User, prompts::profiles_user(claim, domain)}};
    request.tag = std::string(tag::kProfileGeneration);
    request.temperature = config.temperatures.at(tag::kProfileGeneration);
    request.max_tokens = config.max_response_tokens;

    nlohmann::json j;
    try {
        j = session.structured_complete(std::move(request), shape);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::StructuredParseFailure) throw;
        throw Error(ErrorKind::ProfileGenerationFailed, "could not obtain four profiles per team", e.details());
    }

    std::vector<AgentProfile> profiles;
    for (auto team : kTeams) {
        const auto& list = j.at(std::string(to_string(team)));
        for (int seat = 1; seat <= kSeatsPerTeam; ++seat) {
            const auto& p = list.at(static_cast<std::size_t>(seat - 1));
            profiles.push_back(AgentProfile{team, seat, text::trim(p.at("name").get<std::string>()),
                                            text::trim(p.at("persona").get<std::string>())});
        }
    }
    return profiles;
}

std::vector<SpeakerTurn> speaker_schedule(const DebateConfig& config) {
    std::vector<SpeakerTurn> turns;
    for (auto stage : kSpeakingStages) {
        const int rounds = stage == DebateStage::FreeDebate ? config.free_debate_rounds : 1;
        const int seat = stage_index(stage) + 1;
        for (int round = 1; round <= rounds; ++round) {
            for (auto team : kTeams) turns.push_back(SpeakerTurn{stage, team, seat, round});
        }
    }
    return turns;
}

StageSummary compress_stage(ModelSession& session, const Claim& claim, DebateStage stage,
                            std::span<const Utterance> utterances, int budget, const DebateConfig& config) {
    if (utterances.empty()) {
        throw Error(ErrorKind::InvalidStage, std::string("no utterances to compress for ") + std::string(title(stage)));
    }
    if (budget <= 0) throw Error(ErrorKind::InvalidConfig, "summary budget must be positive");

    StageSummary summary;
    summary.stage = stage;
    summary.budget = budget;
    for (const auto& u : utterances) summary.source_ids.push_back(u.id);
    const auto cap = static_cast<std::size_t>(budget);

    auto request_summary = [&](bool tighter) {
        ModelRequest request;
        request.messages = {Message{Role::System, prompts::compression_system()},
                            Message{Role::User, prompts::compression_user(claim, stage, utterances, budget, tighter)}};
        request.tag = std::string(tag::kStageCompression);
        request.temperature = config.temperatures.at(tag::kStageCompression);
        request.max_tokens = std::max(config.max_response_tokens, budget);
        return text::trim(session.complete(std::move(request)).content);
    };

    std::string text;
    try {
        text = request_summary(false);
        if (text::count_tokens(text) > cap) text = request_summary(true);
        if (text.empty()) throw Error(ErrorKind::StructuredParseFailure, "empty summary");
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Interrupted) throw;
        text.clear();
        for (const auto& u : utterances) text += (text.empty() ? "" : "\n") + u.content;
        summary.lossy = true;
    }
    if (text::count_tokens(text) > cap) {
        text = text::truncate_tokens(text, cap);
        summary.lossy = true;
    }
    summary.text = std::move(text);
    summary.tokens = static_cast<int>(text::count_tokens(summary.text));
    return summary;
}

std::vector<Message> build_context(const ContextInputs& in) {
    if (in.stage == DebateStage::Judgment) throw Error(ErrorKind::InvalidStage, "judges do not use debater context");
    if (static_cast<int>(in.summaries.size()) != stage_index(in.stage)) {
        throw Error(ErrorKind::InvalidStage, "expected " + std::to_string(stage_index(in.stage)) +
                                                 " prior stage summaries, got " +
                                                 std::to_string(in.summaries.size()));
    }
    for (std::size_t i = 0; i < in.summaries.size(); ++i) {
        if (stage_index(in.summaries[i].stage) != static_cast<int>(i)) {
            throw Error(ErrorKind::InvalidStage, "stage summaries out of order");
        }
    }

    const auto system = prompts::debater_system(*in.speaker, in.domain);
    std::string head = "Claim: \"" + in.claim->text + "\"\n";
    if (!in.summaries.empty()) head += "\nDebate memory:\n" + prompts::render_summaries(in.summaries);

    const bool with_evidence = in.stage == DebateStage::FreeDebate && !in.evidence.empty();
    std::string evidence;
    if (with_evidence) evidence = "\nEvidence available to your team:\n" + prompts::render_evidence(in.evidence);
    const auto instruction =
        "\n" + prompts::stage_instruction(in.stage, in.speaker->team, in.round, in.total_rounds, with_evidence);

    const auto budget = static_cast<std::size_t>(in.budget);
    const auto fixed = text::count_tokens(system) + text::count_tokens(head) + text::count_tokens(evidence) +
                       text::count_tokens(instruction) + text::count_tokens("This stage so far:");
    if (fixed > budget) {
        throw Error(ErrorKind::ContextOverflow,
                    "context needs " + std::to_string(fixed) + " tokens before verbatim turns, budget " +
                        std::to_string(in.budget));
    }
    std::vector<std::size_t> cost;
    std::size_t verbatim = 0;
    for (std::size_t i = 0; i < in.stage_so_far.size(); ++i) {
        cost.push_back(text::count_tokens(prompts::render_utterances(in.stage_so_far.subspan(i, 1))));
        verbatim += cost.back();
    }
    std::size_t first = 0;
    while (first < cost.size() && fixed + verbatim > budget) verbatim -= cost[first++];

    std::string user = head;
    if (first < in.stage_so_far.size()) {
        user += "\nThis stage so far:\n" + prompts::render_utterances(in.stage_so_far.subspan(first));
    }
    user += evidence + instruction;
    return {Message{Role::System, system}, Message{Role::User, std::move(user)}};
}

// ---------------------------------------------------------------------------

namespace {

class NullObserver final : public DebateObserver {};

void check_stop(const std::stop_token& stop) {
    if (stop.stop_requested()) throw Error(ErrorKind::Interrupted, "debate interrupted");
}

const AgentProfile& find_profile(const std::vector<AgentProfile>& profiles, TeamStance team, int seat) {
    for (const auto& p : profiles) {
        if (p.team == team && p.seat == seat) return p;
    }
    throw Error(ErrorKind::InvalidStage, "no profile for seat " + std::to_string(seat));
}

}  // namespace

DebateRecord run_debate(ModelSession& session, const Claim& claim, const DebateConfig& config,
                        const RunOptions& options) {
    validate_claim(claim);
    config.validate();
    if (config.evidence_enabled && !options.evidence) {
        throw Error(ErrorKind::InvalidConfig, "evidence is enabled but no evidence retriever is configured");
    }

    NullObserver null_observer;
    DebateObserver& observer = options.observer ? *options.observer : null_observer;
    const auto usage_before = session.usage();
    const auto t0 = std::chrono::steady_clock::now();

    DebateRecord record;
    record.claim = claim;
    record.config = config;
    record.started_at = text::utc_now_iso();
    std::string current = "setup";

    auto finish = [&] {
        record.finished_at = text::utc_now_iso();
        record.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        record.usage = session.usage();
        record.usage.calls -= usage_before.calls;
        record.usage.prompt_tokens -= usage_before.prompt_tokens;
        record.usage.completion_tokens -= usage_before.completion_tokens;
    };

    try {
        check_stop(options.stop);
        auto domain = infer_domain(session, claim, config);
        record.domain = domain.label;
        if (domain.defaulted) record.flags.emplace_back("domain-default");
        check_stop(options.stop);
        record.profiles = generate_profiles(session, claim, record.domain, config);

        const auto schedule = speaker_schedule(config);
        int next_id = 0;
        for (auto stage : kSpeakingStages) {
            current = std::string(to_string(stage));
            observer.stage_started(stage, record);
            const auto stage_begin = record.utterances.size();

            for (const auto& turn : schedule) {
                if (turn.stage != stage) continue;
                check_stop(options.stop);
                const auto& speaker = find_profile(record.profiles, turn.team, turn.seat);
                std::vector<EvidenceItem> slice;
                if (stage == DebateStage::FreeDebate && record.evidence) {
                    slice = evidence_slice(*record.evidence, consumer_for(turn.team));
                }
                ContextInputs ctx;
                ctx.claim = &claim;
                ctx.domain = record.domain;
                ctx.speaker = &speaker;
                ctx.stage = stage;
                ctx.round = turn.round;
                ctx.total_rounds = config.free_debate_rounds;
                ctx.summaries = record.summaries;
                ctx.stage_so_far = std::span<const Utterance>(record.utterances).subspan(stage_begin);
                ctx.evidence = slice;
                ctx.budget = config.context_budget;

                ModelRequest request;
                request.messages = build_context(ctx);
                request.tag = std::string(tag::kDebateUtterance);
                request.temperature = config.temperatures.at(tag::kDebateUtterance);
                request.max_tokens = config.max_response_tokens;
                const auto response = session.complete(std::move(request));

                Utterance u;
                u.id = "U" + std::to_string(++next_id);
                u.stage = stage;
                u.team = turn.team;
                u.seat = turn.seat;
                u.round = turn.round;
                u.speaker = speaker.name;
                u.content = text::trim(response.content);
                u.tokens = static_cast<int>(text::count_tokens(u.content));
                record.utterances.push_back(u);
                observer.utterance(u);
            }

            check_stop(options.stop);
            const auto spoken = std::span<const Utterance>(record.utterances).subspan(stage_begin);
            auto summary = compress_stage(session, claim, stage, spoken, config.summary_budget, config);
            if (summary.lossy) record.flags.push_back("lossy-compression:" + std::string(to_string(stage)));
            record.summaries.push_back(summary);
            observer.stage_summary(summary);

            if (stage == DebateStage::Rebuttal && config.evidence_enabled) {
                current = std::string(to_string(DebateStage::FreeDebate));
                check_stop(options.stop);
                auto outcome = options.evidence->gather(session, claim, config);
                record.evidence_queries = std::move(outcome.queries);
                record.flags.insert(record.flags.end(), outcome.flags.begin(), outcome.flags.end());
                record.evidence = std::move(outcome.pool);
                observer.evidence_ready(*record.evidence, record.evidence_queries);
            }
        }

        current = std::string(to_string(DebateStage::Judgment));
        observer.stage_started(DebateStage::Judgment, record);
        check_stop(options.stop);

        std::vector<Utterance> closing;
        for (const auto& u : record.utterances) {
            if (u.stage == DebateStage::Closing) closing.push_back(u);
        }
        std::vector<EvidenceItem> judge_evidence;
        if (record.evidence) judge_evidence = evidence_slice(*record.evidence, Consumer::Judge);
        JudgeContext jctx{&claim, record.summaries, closing, judge_evidence};

        record.ballots = collect_ballots(session, jctx, config.judge_panel_size, config,
                                         [&](const JudgeBallot& b) { observer.ballot(b); });
        const auto tally = aggregate(record.ballots);
        check_stop(options.stop);
        Verdict verdict;
        verdict.label = tally.label;
        verdict.affirmative_total = tally.affirmative_total;
        verdict.negative_total = tally.negative_total;
        verdict.margin = tally.margin;
        verdict.summary = summarize(session, jctx, tally, record.utterances, record.ballots, config);
        if (verdict.summary.mechanical) record.flags.emplace_back("mechanical-summary");
        record.verdict = verdict;
        observer.verdict(verdict);
    } catch (const Error& e) {
        record.failure = DebateFailure{current, std::string(to_string(e.kind())), e.what()};
        finish();
        observer.failed(*record.failure);
        return record;
    }
    finish();
    return record;
}

}  // namespace ed2d
