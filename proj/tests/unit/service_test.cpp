#include <gtest/gtest.h>

#include <condition_variable>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "ed2d/error.hpp"
#include "ed2d/service.hpp"
#include "fixtures.hpp"
#include "sse.hpp"

using namespace ed2d;
using namespace ed2d::testing;
using namespace std::chrono_literals;

namespace {

// Holds every call until opened.
class GateBackend final : public Backend {
public:
    explicit GateBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}
    ModelResponse complete(const ModelRequest& request) override {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return open_; });
        lock.unlock();
        return inner_->complete(request);
    }
    std::string describe() const override { return "gated"; }
    void open() {
        std::lock_guard lock(mu_);
        open_ = true;
        cv_.notify_all();
    }

private:
    std::shared_ptr<Backend> inner_;
    std::mutex mu_;
    std::condition_variable cv_;
    bool open_ = false;
};

std::shared_ptr<Gateway> scripted_gateway() {
    return std::make_shared<Gateway>(std::make_shared<ScriptedBackend>(debate_table()));
}

service::ServiceOptions options_in(const TempDir& dir) {
    service::ServiceOptions o;
    o.storage = dir / "jobs";
    o.rate_limit_per_minute = 1000;
    o.max_concurrent = 2;
    o.heartbeat = 200ms;
    return o;
}

std::shared_ptr<const EvidenceRetriever> retriever() {
    return std::make_shared<const EvidenceRetriever>(evidence_source());
}

nlohmann::json claim_body(int i = 0) { return {{"claim", plume_claim().text + " #" + std::to_string(i)}}; }

bool wait_until(const std::function<bool()>& pred, std::chrono::milliseconds limit = 20s) {
    const auto deadline = std::chrono::steady_clock::now() + limit;
    while (std::chrono::steady_clock::now() < deadline) {
        if (pred()) return true;
        std::this_thread::sleep_for(5ms);
    }
    return pred();
}

bool all_terminal(service::DebateService& svc) {
    for (const auto& j : svc.store().list()) {
        if (!j.terminal()) return false;
    }
    return true;
}

}  // namespace

TEST(ServiceCreate, ValidatesBody) {
    TempDir dir;
    service::DebateService svc(options_in(dir), scripted_gateway(), retriever());
    svc.start();
    const std::vector<nlohmann::json> bad = {
        nlohmann::json::array(),
        nlohmann::json::object(),
        {{"claim", 42}},
        {{"claim", "   "}},
        {{"claim", std::string(1001, 'x')}},
        {{"claim", "ok"}, {"options", 3}},
        {{"claim", "ok"}, {"options", {{"evidence", "yes"}}}},
        {{"claim", "ok"}, {"options", {{"free_debate_rounds", 0}}}},
        {{"claim", "ok"}, {"options", {{"free_debate_rounds", 6}}}},
    };
    for (const auto& b : bad) {
        const auto r = svc.create(b, "c");
        EXPECT_EQ(r.status, 400) << b.dump();
        EXPECT_EQ(r.body.at("error"), "validation");
    }
    EXPECT_TRUE(svc.store().list().empty());
    const auto ok = svc.create({{"claim", std::string(1000, 'x')}}, "c");
    EXPECT_EQ(ok.status, 202);
    EXPECT_EQ(ok.body.at("links").at("events"), "/debates/" + ok.body.at("id").get<std::string>() + "/events");
}

TEST(ServiceCreate, EvidenceOptionNeedsRetriever) {
    TempDir dir;
    service::DebateService svc(options_in(dir), scripted_gateway(), nullptr);
    svc.start();
    EXPECT_EQ(svc.create({{"claim", "x"}, {"options", {{"evidence", true}}}}, "c").status, 400);
    const auto r = svc.create({{"claim", "x"}}, "c");
    ASSERT_EQ(r.status, 202);
    EXPECT_FALSE(svc.store().get(r.body.at("id"))->options.evidence);
}

TEST(ServiceCreate, RateLimitsPerClient) {
    TempDir dir;
    auto o = options_in(dir);
    o.rate_limit_per_minute = 10;
    service::DebateService svc(o, scripted_gateway(), retriever());
    svc.start();
    for (int i = 0; i < 10; ++i) EXPECT_EQ(svc.create(claim_body(i), "alice").status, 202);
    const auto r = svc.create(claim_body(11), "alice");
    EXPECT_EQ(r.status, 429);
    EXPECT_EQ(r.body.at("error"), "rate-limited");
    EXPECT_GT(r.retry_after, 0);
    EXPECT_EQ(svc.create(claim_body(12), "bob").status, 202);
}

TEST(ServiceCreate, ApiKeyGate) {
    TempDir dir;
    auto o = options_in(dir);
    o.api_key = "open-sesame";
    service::DebateService svc(o, scripted_gateway(), retriever());
    svc.start();
    EXPECT_EQ(svc.create(claim_body(), "c").status, 401);
    EXPECT_EQ(svc.create(claim_body(), "c", "wrong").status, 401);
    EXPECT_EQ(svc.create(claim_body(), "c", "open-sesame").status, 202);
}

TEST(ServiceCreate, FullQueueAnswers503) {
    TempDir dir;
    auto o = options_in(dir);
    o.max_concurrent = 1;
    o.queue_capacity = 1;
    auto gate = std::make_shared<GateBackend>(std::make_shared<ScriptedBackend>(debate_table()));
    service::DebateService svc(o, std::make_shared<Gateway>(gate), retriever());
    svc.start();
    ASSERT_EQ(svc.create(claim_body(1), "c").status, 202);
    ASSERT_TRUE(wait_until([&] { return svc.metrics()["executor"]["running"] == 1; }));
    ASSERT_EQ(svc.create(claim_body(2), "c").status, 202);
    const auto r = svc.create(claim_body(3), "c");
    EXPECT_EQ(r.status, 503);
    EXPECT_EQ(r.body.at("error"), "queue-full");
    EXPECT_EQ(svc.store().list().size(), 2u);
    gate->open();
    EXPECT_TRUE(wait_until([&] { return all_terminal(svc); }));
}

TEST(ServiceRun, ConcurrencyCapAndMetrics) {
    TempDir dir;
    auto slow = std::make_shared<SlowBackend>(std::make_shared<ScriptedBackend>(debate_table()), 2ms);
    service::DebateService svc(options_in(dir), std::make_shared<Gateway>(slow), retriever());
    svc.start();
    for (int i = 0; i < 6; ++i) ASSERT_EQ(svc.create(claim_body(i), "c").status, 202);
    ASSERT_TRUE(wait_until([&] { return svc.metrics()["executor"]["finished"] == 6; }));
    const auto m = svc.metrics();
    EXPECT_LE(m["executor"]["max_running_observed"].get<int>(), 2);
    EXPECT_EQ(m["executor"]["finished"], 6);
    EXPECT_EQ(m["jobs"]["succeeded"], 6);
    EXPECT_EQ(m["jobs"]["failed"], 0);
    EXPECT_GT(m["model_usage"]["calls"].get<int>(), 0);
}

TEST(ServiceRun, ViewHidesConfigurationAndUsage) {
    TempDir dir;
    service::DebateService svc(options_in(dir), scripted_gateway(), retriever());
    svc.start();
    const auto id = svc.create(claim_body(), "c").body.at("id").get<std::string>();
    ASSERT_TRUE(wait_until([&] { return all_terminal(svc); }));
    const auto v = *svc.view(id);
    EXPECT_EQ(v.at("status"), "succeeded");
    EXPECT_EQ(v.at("label"), "real");
    const auto& rec = v.at("record");
    for (const auto* hidden : {"config", "usage", "flags", "started_at"}) EXPECT_FALSE(rec.contains(hidden)) << hidden;
    EXPECT_FALSE(rec.at("claim").contains("gold_label"));
    EXPECT_EQ(rec.at("utterances").size(), 8u);
    EXPECT_EQ(rec.at("verdict").at("affirmative_total"), 55);
    EXPECT_FALSE(svc.view("nope").has_value());
}

TEST(ServiceQuery, PaginationAndFilters) {
    TempDir dir;
    service::DebateService svc(options_in(dir), scripted_gateway(), retriever());
    svc.start();
    for (int i = 0; i < 5; ++i) svc.create(claim_body(i), "c");
    ASSERT_TRUE(wait_until([&] { return all_terminal(svc); }));

    service::ListQuery q;
    q.page_size = 2;
    const auto first = svc.list(q);
    EXPECT_EQ(first.at("total"), 5);
    EXPECT_EQ(first.at("items").size(), 2u);
    q.page = 3;
    EXPECT_EQ(svc.list(q).at("items").size(), 1u);
    q.page = 4;
    EXPECT_TRUE(svc.list(q).at("items").empty());

    std::set<std::string> seen;
    for (std::size_t p = 1; p <= 3; ++p) {
        q.page = p;
        const auto page = svc.list(q);
        for (const auto& it : page.at("items")) seen.insert(it.at("id").get<std::string>());
    }
    EXPECT_EQ(seen.size(), 5u);

    service::ListQuery by_label;
    by_label.label = Label::Fake;
    EXPECT_EQ(svc.list(by_label).at("total"), 0);
    by_label.label = Label::Real;
    EXPECT_EQ(svc.list(by_label).at("total"), 5);
    service::ListQuery by_status;
    by_status.status = service::JobStatus::Failed;
    EXPECT_EQ(svc.list(by_status).at("total"), 0);
}

TEST(ServiceRun, WatchdogFailsLongJobs) {
    TempDir dir;
    auto o = options_in(dir);
    o.watchdog = 300ms;
    auto slow = std::make_shared<SlowBackend>(std::make_shared<ScriptedBackend>(debate_table()), 100ms);
    service::DebateService svc(o, std::make_shared<Gateway>(slow), retriever());
    svc.start();
    const auto id = svc.create(claim_body(), "c").body.at("id").get<std::string>();
    ASSERT_TRUE(wait_until([&] { return svc.store().get(id)->terminal(); }, 10s));
    const auto job = *svc.store().get(id);
    EXPECT_EQ(job.status, service::JobStatus::Failed);
    ASSERT_TRUE(job.failure.has_value());
    EXPECT_EQ(job.failure->kind, "interrupted");
    const auto events = svc.store().events(id);
    EXPECT_EQ(events.back().kind, "error");
    EXPECT_EQ(std::count_if(events.begin(), events.end(), [](const auto& e) { return e.terminal(); }), 1);
}

TEST(ServiceRun, RecoveryFailsRunningAndResumesQueued) {
    TempDir dir;
    std::string queued, running;
    {
        service::JobStore store(dir / "jobs");
        Claim c = plume_claim();
        queued = store.create(c, {}, "c").id;
        running = store.create(c, {}, "c").id;
        ASSERT_TRUE(store.mark_running(running));
        store.append(running, "stage_started", {{"stage", "opening"}});
    }
    service::DebateService svc(options_in(dir), scripted_gateway(), retriever());
    svc.start();
    ASSERT_TRUE(wait_until([&] { return all_terminal(svc); }));
    const auto r = *svc.store().get(running);
    EXPECT_EQ(r.status, service::JobStatus::Failed);
    EXPECT_EQ(r.failure->kind, "interrupted");
    EXPECT_EQ(svc.store().events(running).back().kind, "error");
    EXPECT_EQ(svc.store().get(queued)->status, service::JobStatus::Succeeded);
}

TEST(JobStore, RejectsAppendsAfterTerminal) {
    TempDir dir;
    service::JobStore store(dir.path());
    const auto id = store.create(plume_claim(), {}, "c").id;
    ASSERT_TRUE(store.mark_running(id));
    EXPECT_TRUE(store.append(id, "stage_started", {{"stage", "opening"}}));
    EXPECT_TRUE(store.finish_failure(id, DebateFailure{"opening", "backend-unreachable", "down"}));
    EXPECT_FALSE(store.append(id, "utterance", nlohmann::json::object()));
    EXPECT_FALSE(store.finish_failure(id, DebateFailure{"opening", "interrupted", "again"}));
    const auto events = store.events(id);
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(events[1].sequence, 2u);
    EXPECT_EQ(store.events(id, 2).size(), 1u);

    service::JobStore reopened(dir.path());
    EXPECT_EQ(reopened.events(id), events);
    EXPECT_EQ(reopened.get(id)->status, service::JobStatus::Failed);
}

TEST(RateLimiter, SlidingWindow) {
    service::ClientRateLimiter limiter(2);
    const auto t0 = std::chrono::steady_clock::now();
    EXPECT_EQ(limiter.admit("a", t0), 0);
    EXPECT_EQ(limiter.admit("a", t0 + 10s), 0);
    EXPECT_EQ(limiter.admit("a", t0 + 20s), 40);
    EXPECT_EQ(limiter.admit("a", t0 + 61s), 0);
}

TEST(HttpApi, EndToEnd) {
    TempDir dir;
    service::DebateService svc(options_in(dir), scripted_gateway(), retriever());
    svc.start();
    service::HttpServer server(svc);
    ASSERT_TRUE(server.bind("127.0.0.1", 0));
    std::thread serving([&] { server.run(); });
    httplib::Client client("127.0.0.1", server.port());
    ASSERT_TRUE(wait_until([&] { return static_cast<bool>(client.Get("/healthz")); }, 5s));

    auto bad = client.Post("/debates", "{not json", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);

    auto created = client.Post("/debates", claim_body().dump(), "application/json");
    ASSERT_TRUE(created);
    EXPECT_EQ(created->status, 202);
    const auto id = nlohmann::json::parse(created->body).at("id").get<std::string>();
    EXPECT_EQ(created->get_header_value("Location"), "/debates/" + id);

    const auto stream = read_sse(server.port(), "/debates/" + id + "/events");
    EXPECT_EQ(stream.status, 200);
    ASSERT_FALSE(stream.frames.empty());
    EXPECT_EQ(stream.frames.front().event, "stage_started");
    EXPECT_EQ(stream.frames.back().event, "verdict");
    EXPECT_EQ(stream.frames.size(), svc.store().events(id).size());

    auto view = client.Get("/debates/" + id);
    ASSERT_TRUE(view);
    EXPECT_EQ(view->status, 200);
    EXPECT_EQ(nlohmann::json::parse(view->body).at("status"), "succeeded");

    EXPECT_EQ(client.Get("/debates/unknown")->status, 404);
    EXPECT_EQ(client.Get("/debates/unknown/events")->status, 404);
    EXPECT_EQ(client.Get("/debates?page=0")->status, 400);
    EXPECT_EQ(client.Get("/debates?label=maybe")->status, 400);
    auto list = client.Get("/debates?label=real&page_size=5");
    ASSERT_TRUE(list);
    EXPECT_EQ(nlohmann::json::parse(list->body).at("total"), 1);
    auto metrics = client.Get("/metrics");
    ASSERT_TRUE(metrics);
    EXPECT_EQ(nlohmann::json::parse(metrics->body).at("jobs").at("succeeded"), 1);

    const auto replay = read_sse(server.port(), "/debates/" + id + "/events?from=3");
    ASSERT_FALSE(replay.frames.empty());
    EXPECT_EQ(replay.frames.front().id, 3u);
    EXPECT_EQ(client.Get("/debates/" + id + "/events?from=x")->status, 400);

    server.stop();
    serving.join();
}

TEST(HttpApi, HeartbeatsWhileIdle) {
    TempDir dir;
    auto o = options_in(dir);
    o.heartbeat = 50ms;
    auto gate = std::make_shared<GateBackend>(std::make_shared<ScriptedBackend>(debate_table()));
    service::DebateService svc(o, std::make_shared<Gateway>(gate), retriever());
    svc.start();
    service::HttpServer server(svc);
    ASSERT_TRUE(server.bind("127.0.0.1", 0));
    std::thread serving([&] { server.run(); });
    const auto id = svc.create(claim_body(), "c").body.at("id").get<std::string>();
    std::thread opener([&] {
        std::this_thread::sleep_for(400ms);
        gate->open();
    });
    const auto stream = read_sse(server.port(), "/debates/" + id + "/events");
    opener.join();
    EXPECT_GE(stream.heartbeats, 2);
    EXPECT_EQ(stream.frames.back().event, "verdict");
    server.stop();
    serving.join();
}
