#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ed2d/debate.hpp"
#include "ed2d/evidence.hpp"
#include "ed2d/gateway.hpp"

namespace ed2d::service {

enum class JobStatus { Queued, Running, Succeeded, Failed };

std::string_view to_string(JobStatus s) noexcept;
std::optional<JobStatus> parse_status(std::string_view s);

struct JobOptions {
    bool evidence = true;
    int free_debate_rounds = 1;
};

struct Job {
    std::string id;
    Claim claim;
    JobOptions options;
    JobStatus status = JobStatus::Queued;
    std::string stage;  // current stage while running, failing stage when failed
    std::optional<DebateFailure> failure;
    std::optional<Label> label;
    std::string client;
    std::string created_at;
    std::string updated_at;
    bool has_record = false;

    bool terminal() const noexcept { return status == JobStatus::Succeeded || status == JobStatus::Failed; }
};

void to_json(nlohmann::json& j, const Job& job);
void from_json(const nlohmann::json& j, Job& job);

struct Event {
    std::uint64_t sequence = 0;  // 1-based, strictly increasing per job
    std::string kind;  // stage_started, utterance, evidence_ready, stage_summary, ballot, verdict, error
    nlohmann::json payload;

    bool terminal() const noexcept { return kind == "verdict" || kind == "error"; }
    bool operator==(const Event&) const = default;
};

void to_json(nlohmann::json& j, const Event& e);
void from_json(const nlohmann::json& j, Event& e);

// What clients may see of a record: claim text, transcript, evidence with
// stances, ballots, verdict and failure. Never configuration, usage or gold labels.
nlohmann::json public_view(const DebateRecord& record);

// Rebuilds the public view from a job's event log. For every terminal job this
// equals public_view of the stored record.
nlohmann::json fold_events(const Claim& claim, std::span<const Event> events);

// On-disk layout, one directory per job:
//   <root>/<id>/job.json      current job document
//   <root>/<id>/events.jsonl  append-only event log
//   <root>/<id>/record.json   final DebateRecord
// A single writer per job; any number of readers.
class JobStore {
public:
    explicit JobStore(std::filesystem::path root);

    Job create(Claim claim, JobOptions options, std::string client);
    std::optional<Job> get(const std::string& id) const;
    std::vector<Job> list() const;  // newest first

    bool mark_running(const std::string& id);
    // Rejected once the job is terminal or its log already holds a terminal event.
    bool append(const std::string& id, std::string kind, nlohmann::json payload);
    bool finish_success(const std::string& id, const DebateRecord& record);
    // Appends an error event unless the log already ends in one.
    bool finish_failure(const std::string& id, const DebateFailure& failure, const DebateRecord* record = nullptr);

    std::vector<Event> events(const std::string& id, std::uint64_t from = 1) const;
    std::optional<nlohmann::json> record(const std::string& id) const;

    // Blocks until the log holds an event with sequence >= from, the log is
    // closed, or the timeout passes. Returns the events available.
    std::vector<Event> wait_events(const std::string& id, std::uint64_t from, std::chrono::milliseconds timeout,
                                   bool& closed) const;
    void wake_all();

    // Startup recovery: returns queued job ids (oldest first) and fails every
    // job left running by a previous process.
    std::vector<std::string> recover();

    const std::filesystem::path& root() const noexcept { return root_; }

private:
    struct State {
        Job job;
        std::vector<Event> events;
        bool closed = false;
    };

    void persist_job(const Job& job) const;
    void append_locked(State& state, std::string kind, nlohmann::json payload);
    std::filesystem::path dir(const std::string& id) const { return root_ / id; }

    std::filesystem::path root_;
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::map<std::string, State> jobs_;
    std::uint64_t id_counter_ = 0;
};

// Forwards engine callbacks into a job's event log.
class EventRecorder final : public DebateObserver {
public:
    EventRecorder(JobStore& store, std::string job_id) : store_(store), id_(std::move(job_id)) {}

    void stage_started(DebateStage stage, const DebateRecord& record) override;
    void utterance(const Utterance& u) override;
    void evidence_ready(const EvidencePool& pool, std::span<const EvidenceQuery> queries) override;
    void stage_summary(const StageSummary& s) override;
    void ballot(const JudgeBallot& b) override;
    void verdict(const Verdict& v) override;
    void failed(const DebateFailure& f) override;

private:
    JobStore& store_;
    std::string id_;
};

struct ExecutorMetrics {
    std::size_t workers = 0;
    std::size_t running = 0;
    std::size_t max_running_observed = 0;
    std::size_t queued = 0;
    std::size_t queue_capacity = 0;
    std::size_t started = 0;
    std::size_t finished = 0;
};

// Fixed worker pool with a bounded queue; at most `workers` jobs run at once.
class Executor {
public:
    using Task = std::function<void(const std::string& job_id, std::stop_token stop)>;

    Executor(std::size_t workers, std::size_t queue_capacity, Task task);
    ~Executor();

    bool try_submit(const std::string& job_id);
    void force_submit(const std::string& job_id);  // ignores capacity; used during recovery
    bool cancel(const std::string& job_id);        // requests stop of a running job
    // Stops dispatching, requests stop of every running job and joins workers.
    void shutdown();
    ExecutorMetrics metrics() const;

private:
    void loop(std::stop_token worker_stop);

    std::size_t capacity_;
    Task task_;
    mutable std::mutex mu_;
    std::condition_variable_any cv_;
    std::deque<std::string> queue_;
    std::map<std::string, std::stop_source> running_;
    ExecutorMetrics metrics_;
    bool stopping_ = false;
    std::vector<std::jthread> workers_;
};

struct ServiceOptions {
    std::filesystem::path storage = "data/jobs";
    std::size_t max_concurrent = 4;
    std::size_t queue_capacity = 64;
    std::size_t rate_limit_per_minute = 10;
    std::size_t claim_max_chars = 1000;
    std::chrono::milliseconds watchdog{std::chrono::minutes(10)};
    std::chrono::milliseconds heartbeat{std::chrono::seconds(15)};
    std::string api_key;  // empty disables the create gate
    std::filesystem::path static_dir;
    DebateConfig config;
};

// Sliding one-minute window per client key.
class ClientRateLimiter {
public:
    explicit ClientRateLimiter(std::size_t per_minute) : per_minute_(per_minute) {}
    // Returns 0 when admitted, else seconds until the next slot frees.
    int admit(const std::string& client, std::chrono::steady_clock::time_point now = std::chrono::steady_clock::now());

private:
    std::size_t per_minute_;
    std::mutex mu_;
    std::map<std::string, std::deque<std::chrono::steady_clock::time_point>> hits_;
};

struct CreateResult {
    int status = 202;  // 202, 400, 401, 429, 503
    nlohmann::json body;
    int retry_after = 0;
};

struct ListQuery {
    std::size_t page = 1;
    std::size_t page_size = 20;
    std::optional<Label> label;
    std::optional<JobStatus> status;
};

// Transport-independent service core: job admission, execution, queries.
class DebateService {
public:
    DebateService(ServiceOptions options, std::shared_ptr<Gateway> gateway,
                  std::shared_ptr<const EvidenceRetriever> evidence);
    ~DebateService();

    void start();  // recovery, workers, watchdog
    void shutdown();

    CreateResult create(const nlohmann::json& body, const std::string& client, const std::string& presented_key = {});
    std::optional<nlohmann::json> view(const std::string& id) const;
    nlohmann::json list(const ListQuery& query) const;
    nlohmann::json metrics() const;

    JobStore& store() noexcept { return store_; }
    const ServiceOptions& options() const noexcept { return options_; }
    bool stopping() const noexcept { return stopping_.load(); }

private:
    void execute(const std::string& id, std::stop_token stop);
    void watchdog_loop(std::stop_token stop);

    ServiceOptions options_;
    std::shared_ptr<Gateway> gateway_;
    std::shared_ptr<const EvidenceRetriever> evidence_;
    JobStore store_;
    ClientRateLimiter limiter_;
    std::unique_ptr<Executor> executor_;
    std::mutex admit_mu_;
    std::mutex started_mu_;
    std::map<std::string, std::chrono::steady_clock::time_point> started_;
    std::atomic<bool> stopping_{false};
    std::jthread watchdog_;
};

// HTTP + JSON front end with a server-sent event stream per job.
class HttpServer {
public:
    explicit HttpServer(DebateService& service);
    ~HttpServer();

    // Returns false when the address cannot be bound.
    bool bind(const std::string& host, int port);
    int port() const noexcept { return port_; }
    void run();   // blocks until stop()
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace ed2d::service
