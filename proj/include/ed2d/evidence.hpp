#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "ed2d/debate_config.hpp"
#include "ed2d/gateway.hpp"
#include "ed2d/types.hpp"

namespace ed2d {

inline constexpr std::size_t kMaxEvidenceQueries = 5;

struct SearchHit {
    std::string title;
    std::string snippet;
    std::string locator;

    bool operator==(const SearchHit&) const = default;
};

void to_json(nlohmann::json& j, const SearchHit& h);
void from_json(const nlohmann::json& j, SearchHit& h);

// A ranked text source. Implementations must be safe for concurrent calls.
class KnowledgeSource {
public:
    virtual ~KnowledgeSource() = default;
    // Up to `k` hits in relevance order. Throws Error on transport or HTTP failure.
    virtual std::vector<SearchHit> search(const std::string& phrase, int k) = 0;
};

// Spaces request starts at least 1/rate apart across threads.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_second);
    void acquire();

private:
    std::mutex mu_;
    std::chrono::steady_clock::duration interval_;
    std::chrono::steady_clock::time_point next_;
};

struct WikipediaOptions {
    std::string api_url = "https://en.wikipedia.org/w/api.php";
    std::string user_agent = "ed2d-evidence/1.0 (fact-checking research tool)";
    double requests_per_second = 5.0;
    std::chrono::milliseconds timeout{15000};
};

// MediaWiki search (list=search) followed by plain-text intro extracts
// (prop=extracts) for the hits; the extract is the content segment, falling
// back to the search snippet when a page has no extract.
class WikipediaSource final : public KnowledgeSource {
public:
    explicit WikipediaSource(WikipediaOptions options);
    std::vector<SearchHit> search(const std::string& phrase, int k) override;

private:
    WikipediaOptions options_;
    std::string scheme_host_port_;
    std::string path_;
    RateLimiter limiter_;
};

// One JSON document per normalized query phrase. Concurrent readers, serialized writers.
class EvidenceCache {
public:
    explicit EvidenceCache(std::filesystem::path dir);

    std::optional<std::vector<SearchHit>> get(const std::string& phrase, int k) const;
    void put(const std::string& phrase, int k, const std::vector<SearchHit>& hits);
    std::filesystem::path path_for(const std::string& phrase) const;

private:
    std::filesystem::path dir_;
    mutable std::shared_mutex mu_;
};

class CachedSource final : public KnowledgeSource {
public:
    CachedSource(std::shared_ptr<KnowledgeSource> inner, std::shared_ptr<EvidenceCache> cache);
    std::vector<SearchHit> search(const std::string& phrase, int k) override;

private:
    std::shared_ptr<KnowledgeSource> inner_;
    std::shared_ptr<EvidenceCache> cache_;
};

// Fixed hits keyed by normalized phrase, for offline runs and tests. File form:
//   {"queries": {"phrase": [{"title", "snippet", "locator"}]}, "default": [...]}
class StaticSource final : public KnowledgeSource {
public:
    StaticSource(std::map<std::string, std::vector<SearchHit>> by_phrase, std::vector<SearchHit> fallback = {});
    static std::shared_ptr<StaticSource> load(const std::filesystem::path& file);

    std::vector<SearchHit> search(const std::string& phrase, int k) override;
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    std::map<std::string, std::vector<SearchHit>> by_phrase_;
    std::vector<SearchHit> fallback_;
    std::atomic<std::size_t> calls_{0};
};

struct EvidenceOptions {
    int per_query = 3;
    int segment_token_cap = 300;
    int max_in_flight = 4;

    void validate() const;  // throws InvalidConfig
};

struct ExtractionResult {
    std::vector<EvidenceQuery> queries;
    bool fallback = false;
};

// Up to five deduplicated look-up phrases via one structured call at the
// extraction temperature; parse failure degrades to the claim text itself.
ExtractionResult extract_entities(ModelSession& session, const Claim& claim, const DebateConfig& config);

struct RetrievalResult {
    std::vector<EvidenceItem> items;  // ordered by (query ordinal, rank)
    std::vector<int> failed_ordinals;
    int fetched = 0;
};

// Concurrent fan-out across queries (bounded by max_in_flight), merged
// deterministically. A failing query contributes no items and is reported.
RetrievalResult retrieve(KnowledgeSource& source, std::span<const EvidenceQuery> queries,
                         const EvidenceOptions& options);

struct StanceResult {
    Stance stance = Stance::Neutral;
    bool low_confidence = false;
};

// Throws InvalidRequest for an empty snippet. Unparseable output degrades to
// Neutral with low_confidence, since neutral evidence only reaches judges.
StanceResult classify_stance(ModelSession& session, const Claim& claim, const EvidenceItem& item,
                             const DebateConfig& config);

EvidencePool build_pool(std::span<const EvidenceItem> classified);

enum class Consumer { Affirmative, Negative, Judge };
Consumer consumer_for(TeamStance team) noexcept;

// Affirmative sees supporting items, Negative refuting, Judge everything.
std::vector<EvidenceItem> evidence_slice(const EvidencePool& pool, Consumer consumer);

struct EvidenceOutcome {
    EvidencePool pool;
    std::vector<EvidenceQuery> queries;
    std::vector<std::string> flags;  // extraction-fallback, retrieval-partial, retrieval-unavailable, ...
};

// The four-step pipeline: extract, retrieve, classify, partition.
class EvidenceRetriever {
public:
    EvidenceRetriever(std::shared_ptr<KnowledgeSource> source, EvidenceOptions options = {});

    EvidenceOutcome gather(ModelSession& session, const Claim& claim, const DebateConfig& config) const;

    // Number of times gather() reached the knowledge source.
    std::size_t retrieval_runs() const noexcept { return runs_.load(); }

private:
    std::shared_ptr<KnowledgeSource> source_;
    EvidenceOptions options_;
    mutable std::atomic<std::size_t> runs_{0};
};

}  // namespace ed2d
