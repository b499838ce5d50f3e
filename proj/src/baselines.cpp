#include "ed2d/baselines.hpp"

#include <chrono>

#include "ed2d/error.hpp"
#include "ed2d/text.hpp"
#include "prompts.hpp"

namespace ed2d {

namespace {

struct StrategyName {
    Strategy strategy;
    const char* key;
    const char* display;
};

constexpr StrategyName kNames[] = {
    {Strategy::ZeroShot, "zs", "ZS"},       {Strategy::ChainOfThought, "cot", "CoT"},
    {Strategy::SelfReflect, "sr", "SR"},    {Strategy::StandardMad, "smad", "SMAD"},
    {Strategy::D2D, "d2d", "D2D"},          {Strategy::ED2D, "ed2d", "ED2D"},
};

const StrategyName& name_of(Strategy s) {
    for (const auto& n : kNames) {
        if (n.strategy == s) return n;
    }
    throw Error(ErrorKind::InvalidConfig, "unknown strategy");
}

}  // namespace

std::string StrategySpec::key() const {
    std::string k = name_of(strategy).key;
    if (with_evidence && strategy != Strategy::ED2D) k += "+ev";
    return k;
}

std::string StrategySpec::display() const {
    std::string d = name_of(strategy).display;
    if (with_evidence && strategy != Strategy::ED2D) d += " w/ evidence";
    return d;
}

void validate(const StrategySpec& spec) {
    if (spec.strategy == Strategy::D2D && spec.with_evidence) {
        throw Error(ErrorKind::InvalidConfig, "d2d with evidence is ed2d");
    }
    if (spec.strategy == Strategy::ED2D && !spec.with_evidence) {
        throw Error(ErrorKind::InvalidConfig, "ed2d always uses evidence; use d2d");
    }
}

StrategySpec parse_strategy(std::string_view key) {
    auto k = text::to_lower(text::trim(key));
    bool ev = false;
    for (std::string_view suffix : {"+ev", "+evidence"}) {
        if (k.size() > suffix.size() && k.ends_with(suffix)) {
            k.resize(k.size() - suffix.size());
            ev = true;
            break;
        }
    }
    for (const auto& n : kNames) {
        if (k != n.key) continue;
        if (n.strategy == Strategy::ED2D) {
            return StrategySpec{Strategy::ED2D, true};
        }
        StrategySpec spec{n.strategy, ev};
        validate(spec);
        return spec;
    }
    throw Error(ErrorKind::InvalidConfig, "unknown strategy '" + std::string(key) + "'");
}

std::vector<StrategySpec> all_strategies() {
    return {{Strategy::ZeroShot, false},       {Strategy::ZeroShot, true},    {Strategy::ChainOfThought, false},
            {Strategy::ChainOfThought, true},  {Strategy::SelfReflect, false}, {Strategy::SelfReflect, true},
            {Strategy::StandardMad, false},    {Strategy::StandardMad, true}, {Strategy::D2D, false},
            {Strategy::ED2D, true}};
}

void to_json(nlohmann::json& j, const Prediction& p) {
    j = {{"claim_id", p.claim_id}, {"strategy", p.strategy}, {"label", p.label},     {"trace", p.trace},
         {"latency_ms", p.latency_ms}, {"usage", p.usage},   {"flags", p.flags}};
    if (p.record) j["record"] = *p.record;
}

void from_json(const nlohmann::json& j, Prediction& p) {
    p.claim_id = j.at("claim_id").get<std::string>();
    p.strategy = j.at("strategy").get<std::string>();
    p.label = j.at("label").get<Label>();
    p.trace = j.value("trace", std::vector<TraceStep>{});
    p.latency_ms = j.value("latency_ms", 0.0);
    p.usage = j.value("usage", Usage{});
    p.flags = j.value("flags", std::vector<std::string>{});
    if (auto r = j.find("record"); r != j.end() && !r->is_null()) p.record = *r;
    else p.record.reset();
}

// ---------------------------------------------------------------------------

namespace {

const Shape& label_shape() {
    static const Shape shape = Shape::object({Shape::field("label", Shape::one_of({"real", "fake"}))});
    return shape;
}

const Shape& reasoned_label_shape() {
    static const Shape shape = Shape::object(
        {Shape::field("reasoning", Shape::text(true), false), Shape::field("label", Shape::one_of({"real", "fake"}))});
    return shape;
}

Label label_of(const nlohmann::json& j) { return *parse_label(j.at("label").get<std::string>()); }

// Records timing, usage and trace deltas around one strategy run.
class RunScope {
public:
    RunScope(ModelSession& session, const Claim& claim, const StrategySpec& spec)
        : session_(session),
          usage_(session.usage()),
          trace_from_(session.trace().size()),
          t0_(std::chrono::steady_clock::now()) {
        prediction_.claim_id = claim.id;
        prediction_.strategy = spec.key();
    }

    Prediction& prediction() { return prediction_; }

    Prediction finish(bool keep_trace = true) {
        prediction_.latency_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
        const auto& now = session_.usage();
        prediction_.usage = Usage{now.calls - usage_.calls, now.prompt_tokens - usage_.prompt_tokens,
                                  now.completion_tokens - usage_.completion_tokens};
        if (keep_trace) {
            const auto& trace = session_.trace();
            prediction_.trace.assign(trace.begin() + static_cast<std::ptrdiff_t>(trace_from_), trace.end());
        }
        return std::move(prediction_);
    }

private:
    ModelSession& session_;
    Usage usage_;
    std::size_t trace_from_;
    std::chrono::steady_clock::time_point t0_;
    Prediction prediction_;
};

void check_stop(const std::stop_token& stop) {
    if (stop.stop_requested()) throw Error(ErrorKind::Interrupted, "prediction interrupted");
}

// Unrouted pool for strategies without adversarial roles.
std::optional<EvidencePool> gather_pool(ModelSession& session, const Claim& claim, const StrategyOptions& options,
                                        Prediction& prediction) {
    if (!options.evidence) throw Error(ErrorKind::InvalidConfig, "evidence strategy without an evidence retriever");
    auto outcome = options.evidence->gather(session, claim, options.config);
    prediction.flags.insert(prediction.flags.end(), outcome.flags.begin(), outcome.flags.end());
    if (outcome.pool.size() == 0) prediction.flags.emplace_back("evidence-empty");
    return std::move(outcome.pool);
}

ModelRequest make_request(std::string_view tag, std::string system, std::string user, const DebateConfig& config) {
    ModelRequest r;
    r.messages = {Message{Role::System, std::move(system)}, Message{Role::User, std::move(user)}};
    r.tag = std::string(tag);
    r.temperature = config.temperatures.at(tag);
    r.max_tokens = config.max_response_tokens;
    return r;
}

nlohmann::json ask_label(ModelSession& session, ModelRequest request, const Shape& shape) {
    try {
        return session.structured_complete(std::move(request), shape);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::StructuredParseFailure) throw;
        throw Error(ErrorKind::PredictionFailed, "no parseable label", e.details());
    }
}

Prediction single_call(ModelSession& session, const Claim& claim, bool with_evidence, const StrategyOptions& options,
                       Strategy strategy) {
    validate_claim(claim);
    const StrategySpec spec{strategy, with_evidence};
    RunScope scope(session, claim, spec);
    check_stop(options.stop);
    std::string block;
    if (with_evidence) {
        const auto pool = gather_pool(session, claim, options, scope.prediction());
        block = prompts::with_evidence_block(evidence_slice(*pool, Consumer::Judge));
    }
    const bool cot = strategy == Strategy::ChainOfThought;
    auto request = make_request(cot ? tag::kChainOfThought : tag::kZeroShot, prompts::verdict_system(),
                                cot ? prompts::cot_user(claim, block) : prompts::zero_shot_user(claim, block),
                                options.config);
    const auto j = ask_label(session, std::move(request), cot ? reasoned_label_shape() : label_shape());
    scope.prediction().label = label_of(j);
    return scope.finish();
}

}  // namespace

Prediction run_zero_shot(ModelSession& session, const Claim& claim, bool with_evidence,
                         const StrategyOptions& options) {
    return single_call(session, claim, with_evidence, options, Strategy::ZeroShot);
}

Prediction run_cot(ModelSession& session, const Claim& claim, bool with_evidence, const StrategyOptions& options) {
    return single_call(session, claim, with_evidence, options, Strategy::ChainOfThought);
}

Prediction run_self_reflect(ModelSession& session, const Claim& claim, bool with_evidence,
                            const StrategyOptions& options) {
    validate_claim(claim);
    if (options.reflect_max_iterations < 1) throw Error(ErrorKind::InvalidConfig, "reflect_max_iterations must be >= 1");
    RunScope scope(session, claim, StrategySpec{Strategy::SelfReflect, with_evidence});
    check_stop(options.stop);
    std::string block;
    if (with_evidence) {
        const auto pool = gather_pool(session, claim, options, scope.prediction());
        block = prompts::with_evidence_block(evidence_slice(*pool, Consumer::Judge));
    }

    auto answer = ask_label(session,
                            make_request(tag::kReflectDraft, prompts::verdict_system(), prompts::cot_user(claim, block),
                                         options.config),
                            reasoned_label_shape());
    auto label = label_of(answer);
    int iteration = 1;
    bool converged = false;
    while (iteration < options.reflect_max_iterations) {
        check_stop(options.stop);
        const auto previous = answer.dump();
        auto critique = session
                            .complete(make_request(tag::kReflectCritique, prompts::verdict_system(),
                                                   prompts::reflect_critique_user(claim, previous), options.config))
                            .content;
        answer = ask_label(session,
                           make_request(tag::kReflectRevision, prompts::verdict_system(),
                                        prompts::reflect_revision_user(claim, previous, text::trim(critique)),
                                        options.config),
                           reasoned_label_shape());
        ++iteration;
        const auto revised = label_of(answer);
        if (revised == label) {
            label = revised;
            converged = true;
            break;
        }
        label = revised;
    }
    scope.prediction().label = label;
    scope.prediction().flags.push_back((converged ? "converged:" : "iterations:") + std::to_string(iteration));
    return scope.finish();
}

Prediction run_smad(ModelSession& session, const Claim& claim, bool with_evidence, const StrategyOptions& options) {
    validate_claim(claim);
    RunScope scope(session, claim, StrategySpec{Strategy::StandardMad, with_evidence});
    check_stop(options.stop);
    std::string pro_block, con_block, judge_block;
    if (with_evidence) {
        const auto pool = gather_pool(session, claim, options, scope.prediction());
        pro_block = prompts::with_evidence_block(evidence_slice(*pool, Consumer::Affirmative));
        con_block = prompts::with_evidence_block(evidence_slice(*pool, Consumer::Negative));
        judge_block = prompts::with_evidence_block(evidence_slice(*pool, Consumer::Judge));
    }

    std::string transcript;
    for (int turn = 1; turn <= 4; ++turn) {
        check_stop(options.stop);
        const bool pro = turn % 2 == 1;
        auto reply = session.complete(make_request(
            tag::kSmadTurn, prompts::smad_debater_system(pro),
            prompts::smad_turn_user(claim, transcript, pro ? pro_block : con_block, pro, turn), options.config));
        transcript += std::string(pro ? "TRUE side: " : "FAKE side: ") + text::trim(reply.content) + "\n";
    }
    check_stop(options.stop);
    const auto j = ask_label(session,
                             make_request(tag::kSmadJudge, prompts::verdict_system(),
                                          prompts::smad_judge_user(claim, transcript, judge_block), options.config),
                             label_shape());
    scope.prediction().label = label_of(j);
    return scope.finish();
}

Prediction run_debate_strategy(ModelSession& session, const Claim& claim, bool with_evidence,
                               const StrategyOptions& options) {
    const StrategySpec spec{with_evidence ? Strategy::ED2D : Strategy::D2D, with_evidence};
    RunScope scope(session, claim, spec);
    auto config = options.config;
    config.evidence_enabled = with_evidence;
    RunOptions run;
    run.evidence = with_evidence ? options.evidence : nullptr;
    run.observer = options.observer;
    run.stop = options.stop;
    if (with_evidence && !run.evidence) throw Error(ErrorKind::InvalidConfig, "ed2d needs an evidence retriever");

    auto record = run_debate(session, claim, config, run);
    auto doc = nlohmann::json(record);
    if (record.failure) {
        const auto& f = *record.failure;
        const std::string reason = f.stage + ": " + f.reason;
        if (f.kind == to_string(ErrorKind::BackendUnreachable)) throw Error(ErrorKind::BackendUnreachable, reason);
        if (f.kind == to_string(ErrorKind::Interrupted)) throw Error(ErrorKind::Interrupted, reason);
        if (f.kind == to_string(ErrorKind::InvalidClaim)) throw Error(ErrorKind::InvalidClaim, reason);
        throw Error(ErrorKind::PredictionFailed, reason, {doc.dump()});
    }
    auto& p = scope.prediction();
    p.label = record.verdict->label;
    p.flags = record.flags;
    p.record = std::move(doc);
    return scope.finish(false);
}

Prediction predict(ModelSession& session, const Claim& claim, const StrategySpec& spec,
                   const StrategyOptions& options) {
    validate(spec);
    try {
        switch (spec.strategy) {
            case Strategy::ZeroShot: return run_zero_shot(session, claim, spec.with_evidence, options);
            case Strategy::ChainOfThought: return run_cot(session, claim, spec.with_evidence, options);
            case Strategy::SelfReflect: return run_self_reflect(session, claim, spec.with_evidence, options);
            case Strategy::StandardMad: return run_smad(session, claim, spec.with_evidence, options);
            case Strategy::D2D:
            case Strategy::ED2D: return run_debate_strategy(session, claim, spec.with_evidence, options);
        }
    } catch (const Error& e) {
        switch (e.kind()) {
            case ErrorKind::PredictionFailed:
            case ErrorKind::BackendUnreachable:
            case ErrorKind::Interrupted:
            case ErrorKind::InvalidClaim:
            case ErrorKind::InvalidConfig: throw;
            default: throw Error(ErrorKind::PredictionFailed, e.what(), e.details());
        }
    }
    throw Error(ErrorKind::InvalidConfig, "unknown strategy");
}

}  // namespace ed2d
