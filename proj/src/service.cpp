#include "ed2d/service.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <spdlog/spdlog.h>

#include "ed2d/error.hpp"
#include "ed2d/text.hpp"

namespace ed2d::service {

namespace {

constexpr std::array<std::string_view, 4> kStatusNames = {"queued", "running", "succeeded", "failed"};

std::string excerpt(const std::string& s, std::size_t max_points) {
    std::size_t points = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) == 0x80) continue;
        if (points++ == max_points) return s.substr(0, i) + "...";
    }
    return s;
}

void write_atomic(const std::filesystem::path& file, const std::string& content) {
    auto tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
}

std::string make_job_id(std::uint64_t counter) {
    const auto stamp = text::utc_now_iso();  // 2026-10-15T12:34:56.789Z
    std::string digits;
    for (char c : stamp) {
        if (c >= '0' && c <= '9') digits += c;
    }
    static thread_local std::mt19937 rng{std::random_device{}()};
    char tail[16];
    std::snprintf(tail, sizeof tail, "%04x%04x", static_cast<unsigned>(counter & 0xFFFF),
                  static_cast<unsigned>(rng() & 0xFFFF));
    return digits + "-" + tail;
}

}  // namespace

std::string_view to_string(JobStatus s) noexcept { return kStatusNames[static_cast<std::size_t>(s)]; }

std::optional<JobStatus> parse_status(std::string_view s) {
    for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
        if (text::to_lower(s) == kStatusNames[i]) return static_cast<JobStatus>(i);
    }
    return std::nullopt;
}

void to_json(nlohmann::json& j, const Job& job) {
    j = {{"id", job.id},
         {"claim", job.claim},
         {"options", {{"evidence", job.options.evidence}, {"free_debate_rounds", job.options.free_debate_rounds}}},
         {"status", to_string(job.status)},
         {"stage", job.stage},
         {"failure", job.failure ? nlohmann::json(*job.failure) : nlohmann::json(nullptr)},
         {"label", job.label ? nlohmann::json(*job.label) : nlohmann::json(nullptr)},
         {"client", job.client},
         {"created_at", job.created_at},
         {"updated_at", job.updated_at},
         {"has_record", job.has_record}};
}

void from_json(const nlohmann::json& j, Job& job) {
    job.id = j.at("id").get<std::string>();
    job.claim = j.at("claim").get<Claim>();
    const auto& o = j.at("options");
    job.options.evidence = o.value("evidence", true);
    job.options.free_debate_rounds = o.value("free_debate_rounds", 1);
    job.status = parse_status(j.at("status").get<std::string>()).value_or(JobStatus::Failed);
    job.stage = j.value("stage", std::string{});
    if (auto f = j.find("failure"); f != j.end() && !f->is_null()) job.failure = f->get<DebateFailure>();
    if (auto l = j.find("label"); l != j.end() && !l->is_null()) job.label = l->get<Label>();
    job.client = j.value("client", std::string{});
    job.created_at = j.value("created_at", std::string{});
    job.updated_at = j.value("updated_at", std::string{});
    job.has_record = j.value("has_record", false);
}

void to_json(nlohmann::json& j, const Event& e) {
    j = {{"sequence", e.sequence}, {"kind", e.kind}, {"payload", e.payload}};
}

void from_json(const nlohmann::json& j, Event& e) {
    e.sequence = j.at("sequence").get<std::uint64_t>();
    e.kind = j.at("kind").get<std::string>();
    e.payload = j.at("payload");
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json claim_view(const Claim& claim) { return {{"id", claim.id}, {"text", claim.text}}; }

nlohmann::json evidence_view(const EvidencePool& pool, std::span<const EvidenceQuery> queries) {
    nlohmann::json v = pool;
    v["queries"] = std::vector<EvidenceQuery>(queries.begin(), queries.end());
    return v;
}

}  // namespace

nlohmann::json public_view(const DebateRecord& r) {
    nlohmann::json v;
    v["claim"] = claim_view(r.claim);
    if (!r.profiles.empty()) {
        v["domain"] = r.domain;
        v["profiles"] = r.profiles;
    }
    v["utterances"] = r.utterances;
    v["summaries"] = r.summaries;
    v["evidence"] = r.evidence ? evidence_view(*r.evidence, r.evidence_queries) : nlohmann::json(nullptr);
    v["ballots"] = r.ballots;
    v["verdict"] = r.verdict ? nlohmann::json(*r.verdict) : nlohmann::json(nullptr);
    v["failure"] = r.failure ? nlohmann::json(*r.failure) : nlohmann::json(nullptr);
    return v;
}

nlohmann::json fold_events(const Claim& claim, std::span<const Event> events) {
    nlohmann::json v;
    v["claim"] = claim_view(claim);
    v["utterances"] = nlohmann::json::array();
    v["summaries"] = nlohmann::json::array();
    v["evidence"] = nullptr;
    v["ballots"] = nlohmann::json::array();
    v["verdict"] = nullptr;
    v["failure"] = nullptr;
    for (const auto& e : events) {
        if (e.kind == "stage_started") {
            if (auto p = e.payload.find("profiles"); p != e.payload.end() && !p->empty()) {
                v["domain"] = e.payload.value("domain", std::string{});
                v["profiles"] = *p;
            }
        } else if (e.kind == "utterance") {
            v["utterances"].push_back(e.payload);
        } else if (e.kind == "stage_summary") {
            v["summaries"].push_back(e.payload);
        } else if (e.kind == "evidence_ready") {
            v["evidence"] = e.payload;
        } else if (e.kind == "ballot") {
            v["ballots"].push_back(e.payload);
        } else if (e.kind == "verdict") {
            v["verdict"] = e.payload;
        } else if (e.kind == "error") {
            v["failure"] = e.payload;
        }
    }
    return v;
}

// ---------------------------------------------------------------------------

JobStore::JobStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
    for (const auto& entry : std::filesystem::directory_iterator(root_)) {
        if (!entry.is_directory()) continue;
        std::ifstream in(entry.path() / "job.json");
        if (!in) continue;
        auto doc = nlohmann::json::parse(in, nullptr, false);
        if (doc.is_discarded()) {
            spdlog::warn("skipping unreadable job document in {}", entry.path().string());
            continue;
        }
        State state;
        state.job = doc.get<Job>();
        std::ifstream log(entry.path() / "events.jsonl");
        std::string line;
        while (std::getline(log, line)) {
            auto ev = nlohmann::json::parse(line, nullptr, false);
            if (ev.is_discarded()) break;  // torn final line from a crash
            state.events.push_back(ev.get<Event>());
        }
        state.closed = !state.events.empty() && state.events.back().terminal();
        auto id = state.job.id;
        jobs_.emplace(std::move(id), std::move(state));
    }
}

void JobStore::persist_job(const Job& job) const {
    std::filesystem::create_directories(dir(job.id));
    write_atomic(dir(job.id) / "job.json", nlohmann::json(job).dump(1) + "\n");
}

Job JobStore::create(Claim claim, JobOptions options, std::string client) {
    std::lock_guard lock(mu_);
    Job job;
    do {
        job.id = make_job_id(++id_counter_);
    } while (jobs_.contains(job.id));
    claim.id = job.id;
    job.claim = std::move(claim);
    job.options = options;
    job.client = std::move(client);
    job.created_at = text::utc_now_iso();
    job.updated_at = job.created_at;
    persist_job(job);
    jobs_.emplace(job.id, State{job, {}, false});
    return job;
}

std::optional<Job> JobStore::get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second.job;
}

std::vector<Job> JobStore::list() const {
    std::vector<Job> out;
    {
        std::lock_guard lock(mu_);
        for (const auto& [_, s] : jobs_) out.push_back(s.job);
    }
    std::sort(out.begin(), out.end(), [](const Job& a, const Job& b) {
        return std::tie(a.created_at, a.id) > std::tie(b.created_at, b.id);
    });
    return out;
}

bool JobStore::mark_running(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end() || it->second.job.status != JobStatus::Queued) return false;
    auto& job = it->second.job;
    job.status = JobStatus::Running;
    job.stage = "setup";
    job.updated_at = text::utc_now_iso();
    persist_job(job);
    cv_.notify_all();
    return true;
}

void JobStore::append_locked(State& state, std::string kind, nlohmann::json payload) {
    Event e{state.events.size() + 1, std::move(kind), std::move(payload)};
    {
        std::ofstream out(dir(state.job.id) / "events.jsonl", std::ios::app);
        if (!out) throw Error(ErrorKind::Io, "cannot append to event log of " + state.job.id);
        out << nlohmann::json(e).dump() << "\n";
    }
    if (e.kind == "stage_started") {
        state.job.stage = e.payload.value("stage", state.job.stage);
        state.job.updated_at = text::utc_now_iso();
        persist_job(state.job);
    }
    state.closed = e.terminal();
    state.events.push_back(std::move(e));
    cv_.notify_all();
}

bool JobStore::append(const std::string& id, std::string kind, nlohmann::json payload) {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end() || it->second.closed || it->second.job.terminal()) return false;
    append_locked(it->second, std::move(kind), std::move(payload));
    return true;
}

bool JobStore::finish_success(const std::string& id, const DebateRecord& record) {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end() || it->second.job.terminal() || !record.verdict) return false;
    auto& state = it->second;
    if (!state.closed) append_locked(state, "verdict", *record.verdict);
    write_atomic(dir(id) / "record.json", nlohmann::json(record).dump(1) + "\n");
    state.job.status = JobStatus::Succeeded;
    state.job.label = record.verdict->label;
    state.job.stage = std::string(to_string(DebateStage::Judgment));
    state.job.has_record = true;
    state.job.updated_at = text::utc_now_iso();
    persist_job(state.job);
    cv_.notify_all();
    return true;
}

bool JobStore::finish_failure(const std::string& id, const DebateFailure& failure, const DebateRecord* record) {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end() || it->second.job.terminal()) return false;
    auto& state = it->second;
    if (state.closed && state.events.back().kind == "verdict") return false;
    if (!state.closed) append_locked(state, "error", failure);
    if (record) {
        write_atomic(dir(id) / "record.json", nlohmann::json(*record).dump(1) + "\n");
        state.job.has_record = true;
    }
    state.job.status = JobStatus::Failed;
    state.job.failure = failure;
    state.job.stage = failure.stage;
    state.job.updated_at = text::utc_now_iso();
    persist_job(state.job);
    cv_.notify_all();
    return true;
}

std::vector<Event> JobStore::events(const std::string& id, std::uint64_t from) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return {};
    const auto& all = it->second.events;
    const auto start = std::min<std::uint64_t>(std::max<std::uint64_t>(from, 1) - 1, all.size());
    return {all.begin() + static_cast<std::ptrdiff_t>(start), all.end()};
}

std::vector<Event> JobStore::wait_events(const std::string& id, std::uint64_t from, std::chrono::milliseconds timeout,
                                         bool& closed) const {
    from = std::max<std::uint64_t>(from, 1);
    std::unique_lock lock(mu_);
    auto ready = [&] {
        auto it = jobs_.find(id);
        return it == jobs_.end() || it->second.closed || it->second.events.size() >= from;
    };
    cv_.wait_for(lock, timeout, ready);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) {
        closed = true;
        return {};
    }
    closed = it->second.closed;
    const auto& all = it->second.events;
    const auto start = std::min<std::uint64_t>(from - 1, all.size());
    return {all.begin() + static_cast<std::ptrdiff_t>(start), all.end()};
}

void JobStore::wake_all() { cv_.notify_all(); }

std::optional<nlohmann::json> JobStore::record(const std::string& id) const {
    {
        std::lock_guard lock(mu_);
        auto it = jobs_.find(id);
        if (it == jobs_.end() || !it->second.job.has_record) return std::nullopt;
    }
    std::ifstream in(dir(id) / "record.json");
    if (!in) return std::nullopt;
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) return std::nullopt;
    return doc;
}

std::vector<std::string> JobStore::recover() {
    std::vector<Job> queued;
    std::vector<std::string> interrupted;
    {
        std::lock_guard lock(mu_);
        for (auto& [id, state] : jobs_) {
            if (state.job.status == JobStatus::Queued) queued.push_back(state.job);
            if (state.job.status == JobStatus::Running) interrupted.push_back(id);
        }
    }
    for (const auto& id : interrupted) {
        const auto stage = get(id)->stage;
        finish_failure(id, DebateFailure{stage, std::string(ed2d::to_string(ErrorKind::Interrupted)),
                                         "service restarted while the debate was running"});
    }
    std::sort(queued.begin(), queued.end(),
              [](const Job& a, const Job& b) { return std::tie(a.created_at, a.id) < std::tie(b.created_at, b.id); });
    std::vector<std::string> ids;
    for (const auto& j : queued) ids.push_back(j.id);
    return ids;
}

// ---------------------------------------------------------------------------

void EventRecorder::stage_started(DebateStage stage, const DebateRecord& record) {
    nlohmann::json payload{{"stage", stage}};
    if (stage == DebateStage::Opening) {
        payload["domain"] = record.domain;
        payload["profiles"] = record.profiles;
    }
    store_.append(id_, "stage_started", std::move(payload));
}

void EventRecorder::utterance(const Utterance& u) { store_.append(id_, "utterance", u); }

void EventRecorder::evidence_ready(const EvidencePool& pool, std::span<const EvidenceQuery> queries) {
    store_.append(id_, "evidence_ready", evidence_view(pool, queries));
}

void EventRecorder::stage_summary(const StageSummary& s) { store_.append(id_, "stage_summary", s); }
void EventRecorder::ballot(const JudgeBallot& b) { store_.append(id_, "ballot", b); }
void EventRecorder::verdict(const Verdict& v) { store_.append(id_, "verdict", v); }
void EventRecorder::failed(const DebateFailure& f) { store_.append(id_, "error", f); }

// ---------------------------------------------------------------------------

Executor::Executor(std::size_t workers, std::size_t queue_capacity, Task task)
    : capacity_(queue_capacity), task_(std::move(task)) {
    if (workers == 0) throw Error(ErrorKind::InvalidConfig, "executor needs at least one worker");
    metrics_.workers = workers;
    metrics_.queue_capacity = queue_capacity;
    for (std::size_t i = 0; i < workers; ++i) {
        workers_.emplace_back([this](std::stop_token st) { loop(st); });
    }
}

Executor::~Executor() { shutdown(); }

bool Executor::try_submit(const std::string& job_id) {
    {
        std::lock_guard lock(mu_);
        if (stopping_ || queue_.size() >= capacity_) return false;
        queue_.push_back(job_id);
        metrics_.queued = queue_.size();
    }
    cv_.notify_one();
    return true;
}

void Executor::force_submit(const std::string& job_id) {
    {
        std::lock_guard lock(mu_);
        queue_.push_back(job_id);
        metrics_.queued = queue_.size();
    }
    cv_.notify_one();
}

bool Executor::cancel(const std::string& job_id) {
    std::lock_guard lock(mu_);
    auto it = running_.find(job_id);
    if (it == running_.end()) return false;
    it->second.request_stop();
    return true;
}

void Executor::loop(std::stop_token worker_stop) {
    while (true) {
        std::string id;
        std::stop_source source;
        {
            std::unique_lock lock(mu_);
            if (!cv_.wait(lock, worker_stop, [&] { return !queue_.empty() || stopping_; })) return;
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
            running_.emplace(id, source);
            metrics_.queued = queue_.size();
            metrics_.running = running_.size();
            metrics_.max_running_observed = std::max(metrics_.max_running_observed, metrics_.running);
            ++metrics_.started;
        }
        try {
            task_(id, source.get_token());
        } catch (const std::exception& e) {
            spdlog::error("job {} crashed: {}", id, e.what());
        }
        std::lock_guard lock(mu_);
        running_.erase(id);
        metrics_.running = running_.size();
        ++metrics_.finished;
    }
}

void Executor::shutdown() {
    {
        std::lock_guard lock(mu_);
        if (stopping_ && workers_.empty()) return;
        stopping_ = true;
        for (auto& [_, source] : running_) source.request_stop();
    }
    cv_.notify_all();
    for (auto& w : workers_) w.request_stop();
    workers_.clear();  // joins
}

ExecutorMetrics Executor::metrics() const {
    std::lock_guard lock(mu_);
    return metrics_;
}

// ---------------------------------------------------------------------------

int ClientRateLimiter::admit(const std::string& client, std::chrono::steady_clock::time_point now) {
    if (per_minute_ == 0) return 0;
    std::lock_guard lock(mu_);
    auto& hits = hits_[client];
    const auto window = std::chrono::minutes(1);
    while (!hits.empty() && now - hits.front() >= window) hits.pop_front();
    if (hits.size() >= per_minute_) {
        const auto wait = window - (now - hits.front());
        return std::max<int>(1, static_cast<int>(std::chrono::ceil<std::chrono::seconds>(wait).count()));
    }
    hits.push_back(now);
    return 0;
}

// ---------------------------------------------------------------------------

DebateService::DebateService(ServiceOptions options, std::shared_ptr<Gateway> gateway,
                             std::shared_ptr<const EvidenceRetriever> evidence)
    : options_(std::move(options)),
      gateway_(std::move(gateway)),
      evidence_(std::move(evidence)),
      store_(options_.storage),
      limiter_(options_.rate_limit_per_minute) {
    if (!gateway_) throw Error(ErrorKind::InvalidConfig, "service needs a model gateway");
    options_.config.validate();
}

DebateService::~DebateService() { shutdown(); }

void DebateService::start() {
    executor_ = std::make_unique<Executor>(options_.max_concurrent, options_.queue_capacity,
                                           [this](const std::string& id, std::stop_token st) { execute(id, st); });
    for (const auto& id : store_.recover()) executor_->force_submit(id);
    watchdog_ = std::jthread([this](std::stop_token st) { watchdog_loop(st); });
}

void DebateService::shutdown() {
    if (stopping_.exchange(true)) return;
    if (executor_) executor_->shutdown();
    if (watchdog_.joinable()) {
        watchdog_.request_stop();
        watchdog_.join();
    }
    store_.wake_all();
}

void DebateService::execute(const std::string& id, std::stop_token stop) {
    const auto job = store_.get(id);
    if (!job || job->status != JobStatus::Queued) return;
    if (!store_.mark_running(id)) return;
    {
        std::lock_guard lock(started_mu_);
        started_[id] = std::chrono::steady_clock::now();
    }

    auto config = options_.config;
    config.free_debate_rounds = job->options.free_debate_rounds;
    config.evidence_enabled = job->options.evidence && evidence_;
    ModelSession session(*gateway_, id);
    EventRecorder recorder(store_, id);
    RunOptions run;
    run.evidence = evidence_.get();
    run.observer = &recorder;
    run.stop = stop;
    try {
        const auto record = run_debate(session, job->claim, config, run);
        if (record.failure) store_.finish_failure(id, *record.failure, &record);
        else store_.finish_success(id, record);
    } catch (const Error& e) {
        store_.finish_failure(id, DebateFailure{"setup", std::string(ed2d::to_string(e.kind())), e.what()});
    }
    std::lock_guard lock(started_mu_);
    started_.erase(id);
}

void DebateService::watchdog_loop(std::stop_token stop) {
    const auto tick = std::min<std::chrono::milliseconds>(std::chrono::seconds(1), options_.watchdog / 4 + std::chrono::milliseconds(1));
    std::mutex m;
    std::condition_variable_any cv;
    while (!stop.stop_requested()) {
        {
            std::unique_lock lock(m);
            cv.wait_for(lock, stop, tick, [] { return false; });
        }
        if (stop.stop_requested()) return;
        std::vector<std::string> expired;
        {
            std::lock_guard lock(started_mu_);
            const auto now = std::chrono::steady_clock::now();
            for (const auto& [id, t] : started_) {
                if (now - t > options_.watchdog) expired.push_back(id);
            }
        }
        for (const auto& id : expired) {
            const auto job = store_.get(id);
            const auto stage = job ? job->stage : std::string("setup");
            const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.watchdog).count();
            if (store_.finish_failure(id, DebateFailure{stage, std::string(ed2d::to_string(ErrorKind::Interrupted)),
                                                         "exceeded the " + std::to_string(secs) + " s run limit"})) {
                spdlog::warn("job {} exceeded the watchdog limit", id);
            }
            if (executor_) executor_->cancel(id);
            std::lock_guard lock(started_mu_);
            started_.erase(id);
        }
    }
}

namespace {

CreateResult reject(int status, std::string_view kind, const std::string& message, int retry_after = 0) {
    return CreateResult{status, {{"error", kind}, {"message", message}}, retry_after};
}

}  // namespace

CreateResult DebateService::create(const nlohmann::json& body, const std::string& client,
                                   const std::string& presented_key) {
    if (!options_.api_key.empty() && presented_key != options_.api_key) {
        return reject(401, "unauthorized", "a valid API key is required to create debates");
    }
    if (!body.is_object()) return reject(400, "validation", "request body must be a JSON object");
    const auto claim_it = body.find("claim");
    if (claim_it == body.end() || !claim_it->is_string()) {
        return reject(400, "validation", "\"claim\" must be a string");
    }
    const auto claim_text = text::trim(claim_it->get<std::string>());
    if (claim_text.empty()) return reject(400, "validation", "claim is empty");
    if (text::code_points(claim_text) > options_.claim_max_chars) {
        return reject(400, "validation",
                      "claim exceeds " + std::to_string(options_.claim_max_chars) + " characters");
    }
    JobOptions jo;
    jo.evidence = evidence_ != nullptr;
    if (auto o = body.find("options"); o != body.end() && !o->is_null()) {
        if (!o->is_object()) return reject(400, "validation", "\"options\" must be an object");
        if (auto ev = o->find("evidence"); ev != o->end()) {
            if (!ev->is_boolean()) return reject(400, "validation", "options.evidence must be a boolean");
            jo.evidence = ev->get<bool>();
            if (jo.evidence && !evidence_) return reject(400, "validation", "evidence retrieval is not configured");
        }
        if (auto r = o->find("free_debate_rounds"); r != o->end()) {
            if (!r->is_number_integer() || r->get<int>() < 1 || r->get<int>() > 5) {
                return reject(400, "validation", "options.free_debate_rounds must be an integer in [1, 5]");
            }
            jo.free_debate_rounds = r->get<int>();
        }
    }
    if (const int wait = limiter_.admit(client); wait > 0) {
        return reject(429, "rate-limited", "too many debates created; retry later", wait);
    }
    if (stopping_ || !executor_) return reject(503, "unavailable", "service is shutting down", 30);

    std::lock_guard lock(admit_mu_);
    const auto m = executor_->metrics();
    if (m.queued >= m.queue_capacity) return reject(503, "queue-full", "debate queue is full", 30);
    Claim claim;
    claim.text = claim_text;
    const auto job = store_.create(std::move(claim), jo, client);
    if (!executor_->try_submit(job.id)) {
        store_.finish_failure(job.id, DebateFailure{"setup", "queue-full", "debate queue is full"});
        return reject(503, "queue-full", "debate queue is full", 30);
    }
    return CreateResult{202,
                        {{"id", job.id},
                         {"status", "queued"},
                         {"links", {{"self", "/debates/" + job.id}, {"events", "/debates/" + job.id + "/events"}}}},
                        0};
}

std::optional<nlohmann::json> DebateService::view(const std::string& id) const {
    const auto job = store_.get(id);
    if (!job) return std::nullopt;
    nlohmann::json record;
    if (job->terminal() && job->has_record) {
        if (auto doc = store_.record(id)) record = public_view(doc->get<DebateRecord>());
    }
    if (record.is_null()) {
        const auto events = store_.events(id);
        record = fold_events(job->claim, events);
    }
    return nlohmann::json{{"id", job->id},
                          {"status", to_string(job->status)},
                          {"stage", job->stage},
                          {"claim", job->claim.text},
                          {"options",
                           {{"evidence", job->options.evidence}, {"free_debate_rounds", job->options.free_debate_rounds}}},
                          {"label", job->label ? nlohmann::json(*job->label) : nlohmann::json(nullptr)},
                          {"failure", job->failure ? nlohmann::json(*job->failure) : nlohmann::json(nullptr)},
                          {"created_at", job->created_at},
                          {"updated_at", job->updated_at},
                          {"record", std::move(record)}};
}

nlohmann::json DebateService::list(const ListQuery& query) const {
    const auto page_size = std::clamp<std::size_t>(query.page_size, 1, 100);
    const auto page = std::max<std::size_t>(query.page, 1);
    std::vector<Job> matching;
    for (auto& job : store_.list()) {
        if (query.status && job.status != *query.status) continue;
        if (query.label && job.label != query.label) continue;
        matching.push_back(std::move(job));
    }
    auto items = nlohmann::json::array();
    const auto first = (page - 1) * page_size;
    for (std::size_t i = first; i < matching.size() && i < first + page_size; ++i) {
        const auto& job = matching[i];
        items.push_back({{"id", job.id},
                         {"claim", excerpt(job.claim.text, 160)},
                         {"status", to_string(job.status)},
                         {"stage", job.stage},
                         {"label", job.label ? nlohmann::json(*job.label) : nlohmann::json(nullptr)},
                         {"created_at", job.created_at}});
    }
    return {{"page", page}, {"page_size", page_size}, {"total", matching.size()}, {"items", std::move(items)}};
}

nlohmann::json DebateService::metrics() const {
    std::map<std::string, std::size_t> by_status;
    for (auto s : kStatusNames) by_status[std::string(s)] = 0;
    for (const auto& job : store_.list()) ++by_status[std::string(to_string(job.status))];
    nlohmann::json doc{{"jobs", by_status}};
    if (executor_) {
        const auto m = executor_->metrics();
        doc["executor"] = {{"max_concurrent", m.workers},
                           {"running", m.running},
                           {"max_running_observed", m.max_running_observed},
                           {"queued", m.queued},
                           {"queue_capacity", m.queue_capacity},
                           {"started", m.started},
                           {"finished", m.finished}};
    }
    const auto usage = gateway_->ledger().total();
    doc["model_usage"] = usage;
    return doc;
}

}  // namespace ed2d::service
