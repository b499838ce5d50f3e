#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ed2d/baselines.hpp"
#include "ed2d/gateway.hpp"
#include "ed2d/types.hpp"

namespace ed2d {

struct ExpectedCounts {
    std::size_t fake = 0;
    std::size_t real = 0;
    std::size_t total = 0;
};

struct DatasetDescriptor {
    std::string name;
    std::filesystem::path path;
    std::optional<ExpectedCounts> expected;
    // When false a count mismatch is reported as a warning instead of CountMismatch.
    bool strict_counts = true;
};

// Known benchmark shapes: snopes25, fakenewsdataset, weibo21. The weibo21
// published counts are internally inconsistent, so its check only warns.
std::optional<DatasetDescriptor> dataset_preset(const std::string& name, std::filesystem::path path);

struct LoadedDataset {
    std::vector<Claim> claims;
    std::vector<std::string> warnings;
};

// JSON Lines, one {"id", "text", "label", "metadata"?} object per line; blank
// lines are ignored. Labels accept true/real and false/fake in any case.
// Throws DatasetError (with the 1-based line number) or CountMismatch.
LoadedDataset load_dataset(const DatasetDescriptor& descriptor);

// Positive class is Fake.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
    void add(Label gold, Label predicted) noexcept;
    bool operator==(const ConfusionMatrix&) const = default;
};

struct Scored {
    Label gold = Label::Real;
    std::optional<Label> predicted;  // empty when the prediction was skipped
};

enum class Averaging { Binary, Macro };

struct MetricsReport {
    ConfusionMatrix matrix;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
    Averaging averaging = Averaging::Binary;
};

void to_json(nlohmann::json& j, const MetricsReport& m);

// Throws EmptyEvaluation when every item was skipped (or there are none).
MetricsReport compute_metrics(std::span<const Scored> items, Averaging averaging = Averaging::Binary);

struct ManifestEntry {
    std::string claim_id;
    std::string strategy;
    Label gold = Label::Real;
    std::optional<Prediction> prediction;  // empty when skipped
    std::string error;

    bool skipped() const noexcept { return !prediction.has_value(); }
};

void to_json(nlohmann::json& j, const ManifestEntry& e);
void from_json(const nlohmann::json& j, ManifestEntry& e);

struct RunManifest {
    std::string run_id;
    std::string dataset;
    std::vector<std::string> strategies;
    nlohmann::json config = nlohmann::json::object();
    std::size_t claims = 0;
    // Completed (claim id, strategy key) pairs; the resume cursor.
    std::map<std::pair<std::string, std::string>, ManifestEntry> entries;
    std::string created_at;
    std::string updated_at;

    std::size_t tasks() const noexcept { return claims * strategies.size(); }
    std::size_t remaining() const noexcept { return tasks() - entries.size(); }
    bool complete() const noexcept { return entries.size() == tasks(); }
    Usage usage() const;

    void save(const std::filesystem::path& file) const;  // write-then-rename
    static RunManifest load(const std::filesystem::path& file);
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

// Manifest document without wall-clock fields (timestamps, latencies).
nlohmann::json canonical_manifest(const RunManifest& manifest);

struct BenchmarkSpec {
    std::string run_id;
    std::string dataset;
    std::vector<Claim> claims;  // every claim must carry a gold label
    std::vector<StrategySpec> strategies;
    int concurrency = 4;
    bool resume = false;
    std::filesystem::path runs_dir = "runs";
    StrategyOptions options;
    // Dispatch at most this many new tasks in this invocation.
    std::optional<std::size_t> max_tasks;
    // Stops dispatching; tasks already running finish and are checkpointed.
    std::stop_token stop;
    std::function<void(const ManifestEntry&, std::size_t done, std::size_t total)> on_progress;
};

struct BenchmarkOutcome {
    RunManifest manifest;
    std::filesystem::path manifest_path;
    std::size_t remaining_at_start = 0;
    std::size_t executed = 0;
    bool aborted = false;  // backend became unreachable
    std::string abort_reason;
};

// Runs every (claim, strategy) task not already in the manifest on a bounded
// worker pool. Each task gets its own session scoped "<claim id>/<strategy>",
// so scripted results do not depend on scheduling.
BenchmarkOutcome run_benchmark(Gateway& gateway, const BenchmarkSpec& spec);

struct ReportRow {
    std::string strategy;
    std::string display;
    std::optional<MetricsReport> metrics;  // empty when nothing was evaluated
    std::size_t skipped = 0;
};

struct ReportBlock {
    std::string dataset;
    std::vector<ReportRow> rows;
};

std::vector<ReportBlock> build_report(std::span<const RunManifest> manifests, Averaging averaging = Averaging::Binary);
std::string render_report_text(std::span<const ReportBlock> blocks);
nlohmann::json render_report_json(std::span<const ReportBlock> blocks);

// 0.8359 -> "83.59"
std::string percent(double fraction);

}  // namespace ed2d
