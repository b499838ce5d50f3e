#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "ed2d/baselines.hpp"
#include "ed2d/debate.hpp"
#include "ed2d/error.hpp"
#include "ed2d/eval.hpp"
#include "ed2d/judgment.hpp"
#include "ed2d/service.hpp"
#include "fixtures.hpp"
#include "generators.hpp"
#include "sse.hpp"

namespace ed2d::testing {

namespace {

std::string str(std::size_t v) { return std::to_string(v); }

}  // namespace

// ---------------------------------------------------------------------------

Check scoring_algebra(int ballots, std::uint32_t seed) {
    Check c;
    std::mt19937 rng(seed);
    std::vector<JudgeBallot> pool;
    for (int i = 0; i < ballots; ++i) {
        auto b = random_ballot(rng, 1);
        for (const auto& s : b.scores) {
            if (s.affirmative + s.negative != 7) c.fail("pair does not sum to 7");
        }
        if (!validate_ballot(b).empty()) c.fail("generated ballot failed validation");
        pool.push_back(std::move(b));
    }
    // Consecutive odd-sized panels drawn from the pool.
    std::size_t at = 0;
    while (at < pool.size()) {
        const std::size_t size = std::min<std::size_t>(1 + 2 * (rng() % 3), pool.size() - at);
        if (size % 2 == 0) break;
        std::vector<JudgeBallot> panel(pool.begin() + static_cast<long>(at), pool.begin() + static_cast<long>(at + size));
        at += size;
        int aff = 0, neg = 0;
        for (const auto& b : panel) {
            for (const auto& s : b.scores) {
                aff += s.affirmative;
                neg += s.negative;
            }
        }
        const auto t = aggregate(panel);
        if (t.affirmative_total != aff || t.negative_total != neg) c.fail("totals differ from re-summation");
        if (t.margin != std::abs(aff - neg)) c.fail("margin differs");
        if ((t.label == Label::Real) != (aff > neg)) c.fail("label differs from strict comparison");
        if (aff + neg != 35 * static_cast<int>(size)) c.fail("grand total is not 35 x panel");
    }
    // Exhaustive single-judge enumeration: 8^5 affirmative assignments.
    int enumerated = 0;
    for (int code = 0; code < 8 * 8 * 8 * 8 * 8; ++code) {
        JudgeBallot b;
        int rest = code, aff = 0;
        for (auto d : kDimensions) {
            const int a = rest % 8;
            rest /= 8;
            aff += a;
            b.scores.push_back(DimensionScore{d, a, 7 - a, ""});
        }
        const std::vector<JudgeBallot> panel{b};
        const auto t = aggregate(panel);
        if (t.affirmative_total == t.negative_total) c.fail("tie in enumeration");
        if (t.affirmative_total != aff) c.fail("enumeration total differs");
        if ((t.label == Label::Real) != (aff > 35 - aff)) c.fail("enumeration label differs");
        ++enumerated;
    }
    if (enumerated != 32768) c.fail("enumeration covered " + std::to_string(enumerated));
    c.detail = c.ok ? std::to_string(ballots) + " ballots, 32768 enumerated" : c.detail;
    return c;
}

Check no_tie(int sets_per_panel, std::uint32_t seed) {
    Check c;
    std::mt19937 rng(seed);
    for (int panel : {1, 3, 5}) {
        for (int i = 0; i < sets_per_panel; ++i) {
            const auto ballots = random_panel(rng, panel);
            try {
                const auto t = aggregate(ballots);
                if (t.affirmative_total == t.negative_total) c.fail("tie for panel " + std::to_string(panel));
            } catch (const Error& e) {
                c.fail(e.what());
            }
        }
    }
    if (c.ok) c.detail = std::to_string(3 * sets_per_panel) + " panels, no tie";
    return c;
}

// ---------------------------------------------------------------------------

namespace {

struct DebateRun {
    std::unique_ptr<Scripted> scripted;
    std::shared_ptr<StaticSource> source;
    std::unique_ptr<EvidenceRetriever> retriever;
    DebateRecord record;
};

DebateRun run_scripted(ScriptTable table, std::shared_ptr<StaticSource> source, const DebateConfig& config) {
    DebateRun r;
    r.scripted = std::make_unique<Scripted>(std::move(table));
    r.source = std::move(source);
    r.retriever = std::make_unique<EvidenceRetriever>(r.source);
    ModelSession session(*r.scripted->gateway, "c1");
    RunOptions opts;
    opts.evidence = config.evidence_enabled ? r.retriever.get() : nullptr;
    r.record = run_debate(session, plume_claim(), config, opts);
    return r;
}

}  // namespace

Check pipeline_shape() {
    Check c;
    for (int rounds : {1, 3}) {
        DebateConfig config;
        config.free_debate_rounds = rounds;
        const auto r = run_scripted(debate_table(), evidence_source(), config);
        const auto& rec = r.record;
        if (!rec.completed()) {
            c.fail("run did not complete: " + (rec.failure ? rec.failure->reason : std::string("?")));
            continue;
        }
        const auto expected = speaker_schedule(config);
        if (rec.utterances.size() != static_cast<std::size_t>(6 + 2 * rounds)) {
            c.fail(std::to_string(rounds) + " rounds gave " + str(rec.utterances.size()) + " utterances");
        }
        for (std::size_t i = 0; i < std::min(expected.size(), rec.utterances.size()); ++i) {
            const auto& u = rec.utterances[i];
            const auto& t = expected[i];
            if (u.stage != t.stage || u.team != t.team || u.seat != t.seat || u.round != t.round) {
                c.fail("utterance " + str(i + 1) + " out of canonical order");
            }
        }
        if (rec.summaries.size() != 4) c.fail("expected 4 stage summaries");
        for (std::size_t i = 0; i < rec.summaries.size(); ++i) {
            if (rec.summaries[i].stage != kSpeakingStages[i]) c.fail("summary order");
            if (rec.summaries[i].tokens > rec.summaries[i].budget) c.fail("summary over budget");
        }
        if (rec.ballots.size() != 3) c.fail("expected 3 ballots");
        if (rounds == 1) {
            const auto path = golden("ed2d_record.json");
            if (!std::filesystem::exists(path)) {
                c.fail("golden record missing");
            } else if (canonical_json(rec) != nlohmann::json::parse(read_file(path))) {
                c.fail("record differs from golden");
            }
        }
    }
    if (c.ok) c.detail = "8 and 12 utterances, golden record matches";
    return c;
}

// ---------------------------------------------------------------------------

Check evidence_routing(int trials, std::uint32_t seed) {
    Check c;
    std::mt19937 rng(seed);
    const char* stances[] = {"supporting", "refuting", "neutral"};
    std::size_t prompts_checked = 0, items_seen = 0;

    for (int trial = 0; trial < trials; ++trial) {
        const int nq = 1 + static_cast<int>(rng() % 5);
        nlohmann::json queries = {{"queries", nlohmann::json::array()}};
        std::map<std::string, std::vector<SearchHit>> hits;
        int total = 0;
        for (int q = 1; q <= nq; ++q) {
            const auto phrase = "phrase " + std::to_string(trial) + " " + std::to_string(q);
            queries["queries"].push_back({{"phrase", phrase}, {"type", "concept"}});
            const int k = static_cast<int>(rng() % 4);
            for (int r = 1; r <= k; ++r) {
                const auto tag = "snip" + std::to_string(trial) + "q" + std::to_string(q) + "r" + std::to_string(r) + "end";
                hits[phrase].push_back(SearchHit{"Title " + tag, "Segment " + tag + " text.", "loc-" + tag});
                ++total;
            }
        }
        std::vector<ScriptEntry> stance_entries;
        for (int i = 1; i <= total; ++i) {
            stance_entries.push_back(ScriptEntry{"stance-classification", i, "",
                                                 nlohmann::json{{"stance", stances[rng() % 3]}}.dump()});
        }
        auto table = replacing(debate_table(), "entity-extraction",
                               {ScriptEntry{"entity-extraction", 0, "", queries.dump()}});
        table = replacing(table, "stance-classification", stance_entries);

        DebateConfig config;
        config.free_debate_rounds = 1 + static_cast<int>(rng() % 3);
        const auto run = run_scripted(table, std::make_shared<StaticSource>(hits), config);
        if (!run.record.completed() || !run.record.evidence) {
            c.fail("trial " + std::to_string(trial) + " did not complete");
            continue;
        }
        const auto& pool = *run.record.evidence;
        if (pool.size() != static_cast<std::size_t>(total)) c.fail("pool lost items");
        items_seen += pool.size();

        const auto schedule = speaker_schedule(config);
        std::size_t turn = 0;
        for (const auto& call : run.scripted->gateway->call_log()) {
            std::string prompt;
            for (const auto& m : call.request.messages) prompt += m.content + "\n";
            auto contains = [&](const EvidenceItem& e) {
                const auto tag = e.snippet.substr(8, e.snippet.size() - 14);
                return prompt.find(tag) != std::string::npos;
            };
            if (call.request.tag == "debate-utterance") {
                if (turn >= schedule.size()) {
                    c.fail("more utterance calls than turns");
                    break;
                }
                const auto& t = schedule[turn++];
                ++prompts_checked;
                for (const auto& e : pool.neutral) {
                    if (contains(e)) c.fail("neutral " + e.id + " reached a debater");
                }
                const auto& banned = t.team == TeamStance::Affirmative ? pool.refuting : pool.supporting;
                const auto& own = t.team == TeamStance::Affirmative ? pool.supporting : pool.refuting;
                for (const auto& e : banned) {
                    if (contains(e)) c.fail(std::string(to_string(e.stance)) + " " + e.id + " reached " + std::string(to_string(t.team)));
                }
                for (const auto& e : own) {
                    const bool present = contains(e);
                    if (t.stage == DebateStage::FreeDebate && !present) c.fail(e.id + " missing from its team's free debate prompt");
                    if (t.stage != DebateStage::FreeDebate && present) c.fail(e.id + " outside free debate");
                }
            } else if (call.request.tag == "judge-ballot") {
                for (const auto* list : {&pool.supporting, &pool.refuting, &pool.neutral}) {
                    for (const auto& e : *list) {
                        if (!contains(e)) c.fail(e.id + " missing from a judge prompt");
                    }
                }
            }
        }
        if (turn != schedule.size()) c.fail("utterance calls do not match the schedule");
    }
    if (c.ok) c.detail = std::to_string(trials) + " runs, " + str(prompts_checked) + " debater prompts, " + str(items_seen) + " items";
    return c;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t count_tag(const Gateway& g, const std::string& tag) {
    std::size_t n = 0;
    for (const auto& c : g.call_log()) n += c.request.tag == tag;
    return n;
}

}  // namespace

Check baseline_fingerprints() {
    Check c;
    const auto claim = plume_claim();
    auto source = evidence_source();
    EvidenceRetriever retriever(source);

    auto run = [&](const std::string& key, ScriptTable table, int max_iter = 3) {
        auto s = std::make_unique<Scripted>(std::move(table));
        StrategyOptions o;
        o.evidence = &retriever;
        o.reflect_max_iterations = max_iter;
        ModelSession session(*s->gateway, "c1/" + key);
        predict(session, claim, parse_strategy(key), o);
        return s;
    };

    for (const auto* key : {"zs", "cot"}) {
        const auto s = run(key, debate_table());
        if (s->gateway->call_count() != 1) c.fail(std::string(key) + " made " + str(s->gateway->call_count()) + " calls");
    }
    for (const auto* key : {"zs+ev", "cot+ev"}) {
        const auto s = run(key, debate_table());
        const auto verdict_calls = count_tag(*s->gateway, std::string(key) == "zs+ev" ? "zs-answer" : "cot-answer");
        if (verdict_calls != 1) c.fail(std::string(key) + " made " + str(verdict_calls) + " verdict calls");
    }
    for (const auto* key : {"smad", "smad+ev"}) {
        const auto s = run(key, debate_table());
        const auto n = count_tag(*s->gateway, "smad-turn") + count_tag(*s->gateway, "smad-judge");
        if (n != 5) c.fail(std::string(key) + " made " + str(n) + " debate calls");
        if (std::string(key) == "smad" && s->gateway->call_count() != 5) c.fail("smad made extra calls");
    }
    // SR against random revision sequences, including ones that never settle.
    std::mt19937 rng(29);
    for (int max_iter = 1; max_iter <= 4; ++max_iter) {
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<ScriptEntry> revisions;
            for (int i = 1; i <= 8; ++i) {
                revisions.push_back(ScriptEntry{"sr-revision", i, "",
                                                nlohmann::json{{"reasoning", "r"}, {"label", rng() % 2 ? "real" : "fake"}}.dump()});
            }
            const auto s = run("sr", replacing(debate_table(), "sr-revision", revisions), max_iter);
            if (s->gateway->call_count() > static_cast<std::size_t>(1 + 2 * max_iter)) {
                c.fail("sr made " + str(s->gateway->call_count()) + " calls at max_iterations " + std::to_string(max_iter));
            }
        }
    }
    const auto runs_before = retriever.retrieval_runs();
    const auto source_before = source->calls();
    const auto d2d = run("d2d", debate_table());
    if (retriever.retrieval_runs() != runs_before || source->calls() != source_before) c.fail("d2d reached retrieval");
    if (count_tag(*d2d->gateway, "entity-extraction") + count_tag(*d2d->gateway, "stance-classification") != 0) {
        c.fail("d2d issued evidence calls");
    }
    if (c.ok) c.detail = "zs/cot 1, smad 5, sr <= 1+2n, d2d 0 retrievals";
    return c;
}

// ---------------------------------------------------------------------------

Check metrics_oracle(int sets, std::uint32_t seed) {
    Check c;
    auto close = [](double a, double b) { return std::fabs(a - b) <= 1e-9; };
    {
        std::vector<Scored> hand;
        for (int i = 0; i < 2; ++i) hand.push_back({Label::Fake, Label::Fake});
        hand.push_back({Label::Real, Label::Fake});
        hand.push_back({Label::Fake, Label::Real});
        hand.push_back({Label::Real, Label::Real});
        const auto m = compute_metrics(hand);
        if (!close(m.accuracy, 0.6) || !close(m.precision, 2.0 / 3.0) || !close(m.recall, 2.0 / 3.0) ||
            !close(m.f1, 2.0 / 3.0)) {
            c.fail("hand case mismatch");
        }
    }
    std::mt19937 rng(seed);
    for (int s = 0; s < sets; ++s) {
        std::vector<Scored> items;
        const int n = 1 + static_cast<int>(rng() % 60);
        for (int i = 0; i < n; ++i) {
            Scored x;
            x.gold = rng() % 2 ? Label::Fake : Label::Real;
            if (rng() % 10 != 0) x.predicted = rng() % 2 ? Label::Fake : Label::Real;
            items.push_back(x);
        }
        double tp = 0, fp = 0, fn = 0, tn = 0, skipped = 0;
        for (const auto& x : items) {
            if (!x.predicted) {
                ++skipped;
                continue;
            }
            const bool g = x.gold == Label::Fake, p = *x.predicted == Label::Fake;
            tp += g && p;
            fp += !g && p;
            fn += g && !p;
            tn += !g && !p;
        }
        const double evaluated = tp + fp + fn + tn;
        if (evaluated == 0) {
            try {
                compute_metrics(items);
                c.fail("all-skipped set did not raise");
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::EmptyEvaluation) c.fail("wrong error for all-skipped set");
            }
            continue;
        }
        const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        const auto m = compute_metrics(items);
        if (m.matrix.tp != tp || m.matrix.fp != fp || m.matrix.fn != fn || m.matrix.tn != tn) c.fail("matrix mismatch");
        if (static_cast<double>(m.skipped) != skipped) c.fail("skipped mismatch");
        if (!close(m.accuracy, (tp + tn) / evaluated) || !close(m.precision, prec) || !close(m.recall, rec) ||
            !close(m.f1, f1)) {
            c.fail("metric mismatch in set " + std::to_string(s));
        }
    }
    if (c.ok) c.detail = "hand case and " + std::to_string(sets) + " random sets";
    return c;
}

// ---------------------------------------------------------------------------

Check dataset_loader() {
    Check c;
    TempDir dir;
    {
        std::string body;
        int id = 0;
        for (int i = 0; i < 252; ++i) body += nlohmann::json{{"id", "s" + std::to_string(++id)}, {"text", "fake claim " + std::to_string(i)}, {"label", "fake"}}.dump() + "\n";
        for (int i = 0; i < 196; ++i) body += nlohmann::json{{"id", "s" + std::to_string(++id)}, {"text", "real claim " + std::to_string(i)}, {"label", "real"}}.dump() + "\n";
        write_file(dir / "snopes25.jsonl", body);
        const auto d = load_dataset(*dataset_preset("snopes25", dir / "snopes25.jsonl"));
        std::size_t fake = 0;
        for (const auto& cl : d.claims) fake += cl.gold_label == Label::Fake;
        if (d.claims.size() != 448 || fake != 252) c.fail("snopes shape loaded as " + str(d.claims.size()));
    }
    auto expect_line = [&](const std::string& name, const std::string& body, const std::string& needle) {
        write_file(dir / name, body);
        try {
            load_dataset(DatasetDescriptor{"x", dir / name, std::nullopt, true});
            c.fail(name + " loaded");
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DatasetError) c.fail(name + " raised " + std::string(to_string(e.kind())));
            if (std::string(e.what()).find(needle) == std::string::npos) c.fail(name + ": '" + e.what() + "' lacks " + needle);
        }
    };
    expect_line("dup.jsonl",
                "{\"id\":\"a\",\"text\":\"t1\",\"label\":\"real\"}\n{\"id\":\"b\",\"text\":\"t2\",\"label\":\"fake\"}\n"
                "\n{\"id\":\"a\",\"text\":\"t3\",\"label\":\"fake\"}\n",
                "dup.jsonl:4: duplicate id \"a\" (first seen on line 1)");
    expect_line("bad.jsonl",
                "{\"id\":\"a\",\"text\":\"t1\",\"label\":\"real\"}\n{\"id\":\"b\",\"text\":\"t2\",\"label\":\"fake\"}\n"
                "{\"id\":\"c\",\"text\":\"t3\",\"label\":\n",
                "bad.jsonl:3:");
    if (c.ok) c.detail = "448 claims; duplicate at line 4, malformed at line 3";
    return c;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Claim> ten_claims() {
    std::vector<Claim> out;
    for (int i = 1; i <= 10; ++i) {
        Claim c = plume_claim("claim-" + std::to_string(i));
        c.text += " (variant " + std::to_string(i) + ")";
        c.gold_label = i % 3 == 0 ? Label::Real : Label::Fake;
        out.push_back(c);
    }
    return out;
}

}  // namespace

Check benchmark_resume() {
    Check c;
    TempDir dir;
    auto source = evidence_source();
    EvidenceRetriever retriever(source);
    const std::vector<StrategySpec> strategies = {parse_strategy("zs"), parse_strategy("sr"), parse_strategy("smad+ev"),
                                                  parse_strategy("ed2d")};
    auto spec_for = [&](const std::filesystem::path& runs, int concurrency) {
        BenchmarkSpec s;
        s.run_id = "resume-check";
        s.dataset = "synthetic";
        s.claims = ten_claims();
        s.strategies = strategies;
        s.concurrency = concurrency;
        s.runs_dir = runs;
        s.options.evidence = &retriever;
        return s;
    };

    Scripted full(debate_table());
    const auto reference = run_benchmark(*full.gateway, spec_for(dir / "full", 4));

    Scripted first(debate_table());
    auto interrupted = spec_for(dir / "split", 1);
    interrupted.max_tasks = 6 * strategies.size();
    const auto part = run_benchmark(*first.gateway, interrupted);
    if (part.executed != 6 * strategies.size()) c.fail("interrupted run executed " + str(part.executed));
    for (const auto& [key, _] : part.manifest.entries) {
        const auto n = std::stoi(key.first.substr(6));
        if (n > 6) c.fail("task for " + key.first + " ran before the interruption point");
    }

    Scripted second(debate_table());
    auto resumed = spec_for(dir / "split", 4);
    resumed.resume = true;
    const auto rest = run_benchmark(*second.gateway, resumed);
    if (rest.remaining_at_start != 4 * strategies.size()) c.fail("resume saw " + str(rest.remaining_at_start) + " remaining");
    if (!rest.manifest.complete()) c.fail("resumed run incomplete");

    std::set<std::string> first_scopes;
    for (const auto& call : first.gateway->call_log()) first_scopes.insert(call.request.scope);
    for (const auto& call : second.gateway->call_log()) {
        if (first_scopes.count(call.request.scope)) c.fail("duplicate calls for " + call.request.scope);
    }
    const auto split_calls = first.gateway->call_count() + second.gateway->call_count();
    if (split_calls != full.gateway->call_count()) {
        c.fail("split run made " + str(split_calls) + " calls, uninterrupted " + str(full.gateway->call_count()));
    }
    const auto on_disk = RunManifest::load(dir / "split" / "resume-check.json");
    if (canonical_manifest(on_disk) != canonical_manifest(reference.manifest)) c.fail("manifests differ");

    Scripted third(debate_table());
    auto again = spec_for(dir / "split", 2);
    again.resume = true;
    const auto noop = run_benchmark(*third.gateway, again);
    if (noop.remaining_at_start != 0 || third.gateway->call_count() != 0) c.fail("completed run did work on resume");
    if (c.ok) c.detail = str(full.gateway->call_count()) + " calls either way, manifests identical";
    return c;
}

// ---------------------------------------------------------------------------

namespace {

bool wait_terminal(service::DebateService& svc, const std::vector<std::string>& ids, std::chrono::seconds limit) {
    const auto deadline = std::chrono::steady_clock::now() + limit;
    while (std::chrono::steady_clock::now() < deadline) {
        bool all = true;
        for (const auto& id : ids) all = all && svc.store().get(id)->terminal();
        if (all) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return false;
}

void check_fold(Check& c, service::DebateService& svc, const std::string& id) {
    const auto job = svc.store().get(id);
    const auto events = svc.store().events(id);
    const auto fold = service::fold_events(job->claim, events);
    const auto doc = svc.store().record(id);
    if (!doc) {
        c.fail(id + " has no stored record");
        return;
    }
    if (fold != service::public_view(doc->get<DebateRecord>())) c.fail(id + ": fold differs from public view");
    if (svc.view(id)->at("record") != fold) c.fail(id + ": view record differs from fold");
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].sequence != i + 1) c.fail(id + ": sequence gap");
    }
    if (events.empty() || !events.back().terminal()) c.fail(id + ": log does not end in a terminal event");
    const auto expected_last = job->status == service::JobStatus::Succeeded ? "verdict" : "error";
    if (!events.empty() && events.back().kind != expected_last) c.fail(id + ": last event " + events.back().kind);
}

service::ServiceOptions service_options(const std::filesystem::path& storage) {
    service::ServiceOptions o;
    o.storage = storage;
    o.rate_limit_per_minute = 1000;
    o.max_concurrent = 3;
    o.heartbeat = std::chrono::milliseconds(200);
    return o;
}

}  // namespace

Check service_event_sourcing() {
    Check c;
    TempDir dir;
    auto retriever = std::make_shared<const EvidenceRetriever>(evidence_source());
    std::size_t jobs_checked = 0;

    // Successful and failing jobs across option combinations.
    for (bool failing : {false, true}) {
        auto table = failing ? replacing(debate_table(), "judge-ballot", {ScriptEntry{"judge-ballot", 0, "", "abstain"}})
                             : debate_table();
        auto gateway = std::make_shared<Gateway>(std::make_shared<ScriptedBackend>(std::move(table)));
        service::DebateService svc(service_options(dir / (failing ? "fail" : "ok")), gateway, retriever);
        svc.start();
        std::vector<std::string> ids;
        for (int i = 0; i < 4; ++i) {
            const nlohmann::json body = {{"claim", plume_claim().text + " #" + std::to_string(i)},
                                         {"options", {{"evidence", i % 2 == 0}, {"free_debate_rounds", 1 + i / 2}}}};
            const auto r = svc.create(body, "tester");
            if (r.status != 202) {
                c.fail("create returned " + std::to_string(r.status));
                continue;
            }
            ids.push_back(r.body.at("id").get<std::string>());
        }
        if (!wait_terminal(svc, ids, std::chrono::seconds(20))) c.fail("jobs did not finish");
        for (const auto& id : ids) {
            const auto job = svc.store().get(id);
            const auto want = failing ? service::JobStatus::Failed : service::JobStatus::Succeeded;
            if (job->status != want) c.fail(id + " ended " + std::string(service::to_string(job->status)));
            check_fold(c, svc, id);
            ++jobs_checked;
        }
        svc.shutdown();
    }

    // Live stream: hang up after eight frames, reconnect with Last-Event-ID.
    {
        auto scripted = std::make_shared<ScriptedBackend>(debate_table());
        auto gateway = std::make_shared<Gateway>(std::make_shared<SlowBackend>(scripted, std::chrono::milliseconds(15)));
        service::DebateService svc(service_options(dir / "live"), gateway, retriever);
        svc.start();
        service::HttpServer server(svc);
        if (!server.bind("127.0.0.1", 0)) {
            c.fail("cannot bind");
            return c;
        }
        std::thread serving([&] { server.run(); });
        const auto created = svc.create({{"claim", plume_claim().text}}, "tester");
        const auto id = created.body.at("id").get<std::string>();
        const auto path = "/debates/" + id + "/events";

        const auto head = read_sse(server.port(), path, {}, 8);
        const bool still_running = !svc.store().get(id)->terminal();
        const auto last = head.frames.empty() ? 0 : head.frames.back().id;
        const auto tail = read_sse(server.port(), path, {{"Last-Event-ID", std::to_string(last)}});
        wait_terminal(svc, {id}, std::chrono::seconds(20));
        const auto log = svc.store().events(id);

        std::vector<std::uint64_t> seen;
        for (const auto* part : {&head, &tail}) {
            for (const auto& f : part->frames) seen.push_back(f.id);
        }
        std::vector<std::uint64_t> want;
        for (const auto& e : log) want.push_back(e.sequence);
        if (head.frames.size() != 8) c.fail("first connection read " + str(head.frames.size()) + " frames");
        if (!still_running) c.fail("job finished before the reconnect; stream was not live");
        if (seen != want) c.fail("reconnect lost or duplicated events (" + str(seen.size()) + " vs " + str(want.size()) + ")");
        for (const auto* part : {&head, &tail}) {
            for (const auto& f : part->frames) {
                const auto& e = log.at(f.id - 1);
                if (f.event != e.kind || f.data.at("payload") != e.payload) c.fail("frame " + str(f.id) + " differs from log");
            }
        }
        // Replay from a sequence after completion.
        const auto replay = read_sse(server.port(), path + "?from=8");
        if (replay.frames.empty() || replay.frames.front().id != 8 || replay.frames.size() != log.size() - 7) {
            c.fail("replay from 8 returned " + str(replay.frames.size()) + " frames");
        }
        check_fold(c, svc, id);
        ++jobs_checked;
        server.stop();
        serving.join();
        svc.shutdown();
    }
    if (c.ok) c.detail = str(jobs_checked) + " jobs folded; reconnect after 8 frames lossless";
    return c;
}

}  // namespace ed2d::testing
