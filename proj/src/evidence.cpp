#include "ed2d/evidence.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <thread>
#include <tuple>

#include "ed2d/error.hpp"
#include "ed2d/text.hpp"
#include "prompts.hpp"

namespace ed2d {

void to_json(nlohmann::json& j, const SearchHit& h) {
    j = {{"title", h.title}, {"snippet", h.snippet}, {"locator", h.locator}};
}

void from_json(const nlohmann::json& j, SearchHit& h) {
    h.title = j.at("title").get<std::string>();
    h.snippet = j.at("snippet").get<std::string>();
    h.locator = j.value("locator", std::string{});
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double requests_per_second) {
    if (!(requests_per_second > 0.0)) throw Error(ErrorKind::InvalidConfig, "requests_per_second must be positive");
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / requests_per_second));
    next_ = std::chrono::steady_clock::now();
}

void RateLimiter::acquire() {
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(mu_);
        const auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_);
        next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
}

// ---------------------------------------------------------------------------

EvidenceCache::EvidenceCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path EvidenceCache::path_for(const std::string& phrase) const {
    return dir_ / (text::hex64(text::fnv1a64(text::normalize_phrase(phrase))) + ".json");
}

std::optional<std::vector<SearchHit>> EvidenceCache::get(const std::string& phrase, int k) const {
    std::shared_lock lock(mu_);
    std::ifstream in(path_for(phrase));
    if (!in) return std::nullopt;
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || doc.value("phrase", std::string{}) != text::normalize_phrase(phrase)) {
        return std::nullopt;
    }
    auto hits = doc.at("hits").get<std::vector<SearchHit>>();
    // A short list fetched with a smaller k may be incomplete for this k.
    if (doc.value("k", 0) < k && static_cast<int>(hits.size()) >= doc.value("k", 0)) return std::nullopt;
    if (static_cast<int>(hits.size()) > k) hits.resize(static_cast<std::size_t>(k));
    return hits;
}

void EvidenceCache::put(const std::string& phrase, int k, const std::vector<SearchHit>& hits) {
    const nlohmann::json doc{{"phrase", text::normalize_phrase(phrase)}, {"k", k}, {"hits", hits}};
    const auto path = path_for(phrase);
    auto tmp = path;
    tmp += ".tmp";
    std::unique_lock lock(mu_);
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write evidence cache " + tmp.string());
        out << doc.dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
}

CachedSource::CachedSource(std::shared_ptr<KnowledgeSource> inner, std::shared_ptr<EvidenceCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::vector<SearchHit> CachedSource::search(const std::string& phrase, int k) {
    if (auto hit = cache_->get(phrase, k)) return *hit;
    auto hits = inner_->search(phrase, k);
    cache_->put(phrase, k, hits);
    return hits;
}

StaticSource::StaticSource(std::map<std::string, std::vector<SearchHit>> by_phrase, std::vector<SearchHit> fallback)
    : fallback_(std::move(fallback)) {
    for (auto& [phrase, hits] : by_phrase) by_phrase_[text::normalize_phrase(phrase)] = std::move(hits);
}

std::shared_ptr<StaticSource> StaticSource::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::NotFound, "evidence fixture not found: " + file.string());
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorKind::InvalidConfig, file.string() + " is not a JSON object");
    return std::make_shared<StaticSource>(
        doc.value("queries", std::map<std::string, std::vector<SearchHit>>{}),
        doc.value("default", std::vector<SearchHit>{}));
}

std::vector<SearchHit> StaticSource::search(const std::string& phrase, int k) {
    ++calls_;
    auto it = by_phrase_.find(text::normalize_phrase(phrase));
    auto hits = it == by_phrase_.end() ? fallback_ : it->second;
    if (static_cast<int>(hits.size()) > k) hits.resize(static_cast<std::size_t>(k));
    return hits;
}

// ---------------------------------------------------------------------------

void EvidenceOptions::validate() const {
    if (per_query <= 0) throw Error(ErrorKind::InvalidConfig, "segments per query must be positive");
    if (segment_token_cap <= 0) throw Error(ErrorKind::InvalidConfig, "segment token cap must be positive");
    if (max_in_flight <= 0) throw Error(ErrorKind::InvalidConfig, "max_in_flight must be positive");
}

namespace {

const Shape& extraction_shape() {
    static const Shape shape = Shape::object({Shape::field(
        "queries", Shape::list_of(Shape::object({Shape::field("phrase", Shape::text()),
                                                 Shape::field("type", Shape::one_of({"entity", "relation", "concept"}),
                                                              false)}),
                                  1))});
    return shape;
}

const Shape& stance_shape() {
    static const Shape shape = Shape::object({Shape::field("stance", Shape::one_of({"supporting", "refuting", "neutral"}))});
    return shape;
}

}  // namespace

ExtractionResult extract_entities(ModelSession& session, const Claim& claim, const DebateConfig& config) {
    validate_claim(claim);
    ModelRequest request;
    request.messages = {Message{Role::System, prompts::extraction_system()},
                        Message{Role::User, prompts::extraction_user(claim)}};
    request.tag = std::string(tag::kEntityExtraction);
    request.temperature = config.temperatures.at(tag::kEntityExtraction);
    request.max_tokens = config.max_response_tokens;

    ExtractionResult result;
    try {
        const auto j = session.structured_complete(request, extraction_shape());
        std::set<std::string> seen;
        for (const auto& q : j.at("queries")) {
            const auto phrase = text::trim(q.at("phrase").get<std::string>());
            if (!seen.insert(text::normalize_phrase(phrase)).second) continue;
            EvidenceQuery query;
            query.phrase = phrase;
            query.origin = parse_origin(q.value("type", std::string{"entity"})).value_or(QueryOrigin::Entity);
            query.ordinal = static_cast<int>(result.queries.size()) + 1;
            result.queries.push_back(std::move(query));
            if (result.queries.size() == kMaxEvidenceQueries) break;
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::StructuredParseFailure) throw;
        result.queries = {EvidenceQuery{text::trim(claim.text), QueryOrigin::Concept, 1}};
        result.fallback = true;
    }
    return result;
}

RetrievalResult retrieve(KnowledgeSource& source, std::span<const EvidenceQuery> queries,
                         const EvidenceOptions& options) {
    options.validate();
    if (queries.empty()) throw Error(ErrorKind::InvalidRequest, "retrieve needs at least one query");

    struct Slot {
        std::vector<SearchHit> hits;
        bool failed = false;
    };
    std::vector<Slot> slots(queries.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto i = next.fetch_add(1); i < queries.size(); i = next.fetch_add(1)) {
            try {
                slots[i].hits = source.search(queries[i].phrase, options.per_query);
                if (static_cast<int>(slots[i].hits.size()) > options.per_query) {
                    slots[i].hits.resize(static_cast<std::size_t>(options.per_query));
                }
            } catch (const std::exception&) {
                slots[i].failed = true;
            }
        }
    };
    {
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(options.max_in_flight), queries.size());
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
        worker();
    }

    RetrievalResult result;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto ordinal = queries[i].ordinal;
        if (slots[i].failed) {
            result.failed_ordinals.push_back(ordinal);
            continue;
        }
        int rank = 0;
        for (auto& hit : slots[i].hits) {
            ++rank;
            ++result.fetched;
            EvidenceItem item;
            item.id = "E" + std::to_string(ordinal) + "." + std::to_string(rank);
            item.query_ordinal = ordinal;
            item.rank = rank;
            item.title = std::move(hit.title);
            item.snippet = text::truncate_tokens(text::trim(hit.snippet), static_cast<std::size_t>(options.segment_token_cap));
            item.locator = std::move(hit.locator);
            result.items.push_back(std::move(item));
        }
    }
    return result;
}

StanceResult classify_stance(ModelSession& session, const Claim& claim, const EvidenceItem& item,
                             const DebateConfig& config) {
    if (text::trim(item.snippet).empty()) {
        throw Error(ErrorKind::InvalidRequest, "evidence item " + item.id + " has an empty snippet");
    }
    ModelRequest request;
    request.messages = {Message{Role::System, prompts::stance_system()},
                        Message{Role::User, prompts::stance_user(claim, item)}};
    request.tag = std::string(tag::kStanceClassification);
    request.temperature = config.temperatures.at(tag::kStanceClassification);
    request.max_tokens = config.max_response_tokens;
    try {
        const auto j = session.structured_complete(request, stance_shape());
        return StanceResult{*parse_stance(j.at("stance").get<std::string>()), false};
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::StructuredParseFailure) throw;
        return StanceResult{Stance::Neutral, true};
    }
}

EvidencePool build_pool(std::span<const EvidenceItem> classified) {
    EvidencePool pool;
    for (const auto& item : classified) {
        switch (item.stance) {
            case Stance::Supporting: pool.supporting.push_back(item); break;
            case Stance::Refuting: pool.refuting.push_back(item); break;
            case Stance::Neutral: pool.neutral.push_back(item); break;
        }
    }
    pool.total_fetched = static_cast<int>(classified.size());
    return pool;
}

Consumer consumer_for(TeamStance team) noexcept {
    return team == TeamStance::Affirmative ? Consumer::Affirmative : Consumer::Negative;
}

std::vector<EvidenceItem> evidence_slice(const EvidencePool& pool, Consumer consumer) {
    switch (consumer) {
        case Consumer::Affirmative: return pool.supporting;
        case Consumer::Negative: return pool.refuting;
        case Consumer::Judge: break;
    }
    std::vector<EvidenceItem> all;
    all.reserve(pool.size());
    all.insert(all.end(), pool.supporting.begin(), pool.supporting.end());
    all.insert(all.end(), pool.refuting.begin(), pool.refuting.end());
    all.insert(all.end(), pool.neutral.begin(), pool.neutral.end());
    std::sort(all.begin(), all.end(), [](const EvidenceItem& a, const EvidenceItem& b) {
        return std::tie(a.query_ordinal, a.rank) < std::tie(b.query_ordinal, b.rank);
    });
    return all;
}

// ---------------------------------------------------------------------------

EvidenceRetriever::EvidenceRetriever(std::shared_ptr<KnowledgeSource> source, EvidenceOptions options)
    : source_(std::move(source)), options_(options) {
    if (!source_) throw Error(ErrorKind::InvalidConfig, "evidence retriever needs a knowledge source");
    options_.validate();
}

EvidenceOutcome EvidenceRetriever::gather(ModelSession& session, const Claim& claim, const DebateConfig& config) const {
    ++runs_;
    EvidenceOutcome outcome;
    auto extraction = extract_entities(session, claim, config);
    if (extraction.fallback) outcome.flags.emplace_back("extraction-fallback");
    outcome.queries = extraction.queries;

    auto retrieved = retrieve(*source_, outcome.queries, options_);
    if (!retrieved.failed_ordinals.empty()) {
        outcome.flags.emplace_back(retrieved.failed_ordinals.size() == outcome.queries.size()
                                       ? "retrieval-unavailable"
                                       : "retrieval-partial");
    }

    std::vector<EvidenceItem> classified;
    bool discarded = false;
    for (auto& item : retrieved.items) {
        if (text::trim(item.snippet).empty()) {
            discarded = true;
            continue;
        }
        const auto stance = classify_stance(session, claim, item, config);
        item.stance = stance.stance;
        item.low_confidence = stance.low_confidence;
        classified.push_back(std::move(item));
    }
    if (discarded) outcome.flags.emplace_back("empty-segment-discarded");

    outcome.pool = build_pool(classified);
    outcome.pool.total_fetched = retrieved.fetched;
    outcome.pool.retrieved_at = text::utc_now_iso();
    return outcome;
}

}  // namespace ed2d
