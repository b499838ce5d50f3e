#include "ed2d/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ed2d/error.hpp"
#include "ed2d/text.hpp"

namespace ed2d {

std::optional<DatasetDescriptor> dataset_preset(const std::string& name, std::filesystem::path path) {
    const auto key = text::to_lower(name);
    DatasetDescriptor d{key, std::move(path), std::nullopt, true};
    if (key == "snopes25") {
        d.expected = ExpectedCounts{252, 196, 448};
    } else if (key == "fakenewsdataset") {
        d.expected = ExpectedCounts{466, 466, 932};
    } else if (key == "weibo21") {
        d.expected = ExpectedCounts{2373, 2461, 4843};
        d.strict_counts = false;
    } else {
        return std::nullopt;
    }
    return d;
}

namespace {

std::optional<Label> parse_gold(const nlohmann::json& v) {
    if (v.is_boolean()) return v.get<bool>() ? Label::Real : Label::Fake;
    if (!v.is_string()) return std::nullopt;
    const auto s = text::to_lower(text::trim(v.get<std::string>()));
    if (s == "true" || s == "real") return Label::Real;
    if (s == "false" || s == "fake") return Label::Fake;
    return std::nullopt;
}

[[noreturn]] void line_error(const DatasetDescriptor& d, std::size_t line, const std::string& what) {
    throw Error(ErrorKind::DatasetError, d.path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

LoadedDataset load_dataset(const DatasetDescriptor& descriptor) {
    std::ifstream in(descriptor.path);
    if (!in) throw Error(ErrorKind::NotFound, "dataset file not found: " + descriptor.path.string());

    LoadedDataset out;
    std::map<std::string, std::size_t> seen;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (text::trim(raw).empty()) continue;
        auto doc = nlohmann::json::parse(raw, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) line_error(descriptor, line, "not a JSON object");

        Claim claim;
        const auto id = doc.find("id");
        if (id == doc.end() || !(id->is_string() || id->is_number_integer())) {
            line_error(descriptor, line, "missing or invalid \"id\"");
        }
        claim.id = id->is_string() ? id->get<std::string>() : std::to_string(id->get<long long>());
        if (claim.id.empty()) line_error(descriptor, line, "empty \"id\"");
        const auto body = doc.find("text");
        if (body == doc.end() || !body->is_string() || text::trim(body->get<std::string>()).empty()) {
            line_error(descriptor, line, "missing or empty \"text\"");
        }
        claim.text = body->get<std::string>();
        const auto label = doc.find("label");
        if (label == doc.end()) line_error(descriptor, line, "missing \"label\"");
        claim.gold_label = parse_gold(*label);
        if (!claim.gold_label) line_error(descriptor, line, "unrecognised label " + label->dump());
        if (auto lang = doc.find("language"); lang != doc.end() && lang->is_string()) {
            claim.language = lang->get<std::string>();
        }
        if (auto meta = doc.find("metadata"); meta != doc.end() && !meta->is_null()) {
            if (!meta->is_object()) line_error(descriptor, line, "\"metadata\" must be an object");
            for (const auto& [k, v] : meta->items()) claim.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
        if (auto [it, fresh] = seen.emplace(claim.id, line); !fresh) {
            line_error(descriptor, line, "duplicate id \"" + claim.id + "\" (first seen on line " +
                                             std::to_string(it->second) + ")");
        }
        out.claims.push_back(std::move(claim));
    }

    if (descriptor.expected) {
        const auto& e = *descriptor.expected;
        std::size_t fake = 0;
        for (const auto& c : out.claims) fake += *c.gold_label == Label::Fake;
        const std::size_t real = out.claims.size() - fake;
        std::vector<std::string> problems;
        if (e.fake + e.real != e.total) {
            out.warnings.push_back("expected counts for " + descriptor.name + " are inconsistent: " +
                                   std::to_string(e.fake) + " + " + std::to_string(e.real) +
                                   " != " + std::to_string(e.total));
        }
        if (fake != e.fake) problems.push_back("fake " + std::to_string(fake) + " (expected " + std::to_string(e.fake) + ")");
        if (real != e.real) problems.push_back("real " + std::to_string(real) + " (expected " + std::to_string(e.real) + ")");
        if (out.claims.size() != e.total) {
            problems.push_back("total " + std::to_string(out.claims.size()) + " (expected " + std::to_string(e.total) + ")");
        }
        if (!problems.empty()) {
            std::string msg = descriptor.name + " count mismatch:";
            for (const auto& p : problems) msg += " " + p + ";";
            msg.pop_back();
            if (descriptor.strict_counts) throw Error(ErrorKind::CountMismatch, msg);
            out.warnings.push_back(msg);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

void ConfusionMatrix::add(Label gold, Label predicted) noexcept {
    const bool g = gold == Label::Fake;
    const bool p = predicted == Label::Fake;
    if (g && p) ++tp;
    else if (!g && p) ++fp;
    else if (g && !p) ++fn;
    else ++tn;
}

namespace {

double ratio(std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

MetricsReport compute_metrics(std::span<const Scored> items, Averaging averaging) {
    MetricsReport m;
    m.averaging = averaging;
    for (const auto& item : items) {
        if (!item.predicted) {
            ++m.skipped;
            continue;
        }
        m.matrix.add(item.gold, *item.predicted);
    }
    m.evaluated = m.matrix.total();
    if (m.evaluated == 0) {
        throw Error(ErrorKind::EmptyEvaluation, "no evaluated predictions (" + std::to_string(m.skipped) + " skipped)");
    }
    const auto& c = m.matrix;
    m.accuracy = ratio(c.tp + c.tn, m.evaluated);
    const double p_fake = ratio(c.tp, c.tp + c.fp);
    const double r_fake = ratio(c.tp, c.tp + c.fn);
    if (averaging == Averaging::Binary) {
        m.precision = p_fake;
        m.recall = r_fake;
        m.f1 = harmonic(p_fake, r_fake);
    } else {
        const double p_real = ratio(c.tn, c.tn + c.fn);
        const double r_real = ratio(c.tn, c.tn + c.fp);
        m.precision = (p_fake + p_real) / 2.0;
        m.recall = (r_fake + r_real) / 2.0;
        m.f1 = (harmonic(p_fake, r_fake) + harmonic(p_real, r_real)) / 2.0;
    }
    return m;
}

void to_json(nlohmann::json& j, const MetricsReport& m) {
    j = {{"accuracy", m.accuracy},
         {"precision", m.precision},
         {"recall", m.recall},
         {"f1", m.f1},
         {"evaluated", m.evaluated},
         {"skipped", m.skipped},
         {"averaging", m.averaging == Averaging::Binary ? "binary" : "macro"},
         {"confusion", {{"tp", m.matrix.tp}, {"fp", m.matrix.fp}, {"fn", m.matrix.fn}, {"tn", m.matrix.tn}}}};
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const ManifestEntry& e) {
    j = {{"claim_id", e.claim_id}, {"strategy", e.strategy}, {"gold", e.gold}};
    if (e.prediction) j["prediction"] = *e.prediction;
    else j["error"] = e.error;
}

void from_json(const nlohmann::json& j, ManifestEntry& e) {
    e.claim_id = j.at("claim_id").get<std::string>();
    e.strategy = j.at("strategy").get<std::string>();
    e.gold = j.at("gold").get<Label>();
    if (auto p = j.find("prediction"); p != j.end()) e.prediction = p->get<Prediction>();
    else e.prediction.reset();
    e.error = j.value("error", std::string{});
}

Usage RunManifest::usage() const {
    Usage total;
    for (const auto& [_, e] : entries) {
        if (e.prediction) total += e.prediction->usage;
    }
    return total;
}

void to_json(nlohmann::json& j, const RunManifest& m) {
    auto entries = nlohmann::json::array();
    for (const auto& [_, e] : m.entries) entries.push_back(e);
    j = {{"run_id", m.run_id},     {"dataset", m.dataset},       {"strategies", m.strategies},
         {"config", m.config},     {"claims", m.claims},         {"completed", m.entries.size()},
         {"usage", m.usage()},     {"created_at", m.created_at}, {"updated_at", m.updated_at},
         {"entries", entries}};
}

void from_json(const nlohmann::json& j, RunManifest& m) {
    m = RunManifest{};
    m.run_id = j.at("run_id").get<std::string>();
    m.dataset = j.at("dataset").get<std::string>();
    m.strategies = j.at("strategies").get<std::vector<std::string>>();
    m.config = j.value("config", nlohmann::json::object());
    m.claims = j.at("claims").get<std::size_t>();
    m.created_at = j.value("created_at", std::string{});
    m.updated_at = j.value("updated_at", std::string{});
    for (const auto& e : j.at("entries")) {
        auto entry = e.get<ManifestEntry>();
        auto key = std::make_pair(entry.claim_id, entry.strategy);
        m.entries.emplace(std::move(key), std::move(entry));
    }
}

void RunManifest::save(const std::filesystem::path& file) const {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    auto tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out << nlohmann::json(*this).dump(1) << "\n";
        if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
}

RunManifest RunManifest::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorKind::NotFound, "manifest not found: " + file.string());
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorKind::Validation, "manifest is not valid JSON: " + file.string());
    return doc.get<RunManifest>();
}

nlohmann::json canonical_manifest(const RunManifest& manifest) {
    auto doc = nlohmann::json(manifest);
    doc.erase("created_at");
    doc.erase("updated_at");
    for (auto& e : doc["entries"]) {
        auto p = e.find("prediction");
        if (p == e.end()) continue;
        p->erase("latency_ms");
        if (auto r = p->find("record"); r != p->end()) {
            r->erase("started_at");
            r->erase("finished_at");
            r->erase("elapsed_ms");
            if (auto ev = r->find("evidence"); ev != r->end() && ev->is_object()) ev->erase("retrieved_at");
        }
    }
    return doc;
}

// ---------------------------------------------------------------------------

BenchmarkOutcome run_benchmark(Gateway& gateway, const BenchmarkSpec& spec) {
    if (spec.strategies.empty()) throw Error(ErrorKind::InvalidConfig, "no strategies selected");
    if (spec.concurrency < 1) throw Error(ErrorKind::InvalidConfig, "concurrency must be at least 1");
    if (spec.run_id.empty()) throw Error(ErrorKind::InvalidConfig, "run id is empty");
    std::set<std::string> ids;
    for (const auto& c : spec.claims) {
        if (!c.gold_label) throw Error(ErrorKind::DatasetError, "claim " + c.id + " has no gold label");
        if (!ids.insert(c.id).second) throw Error(ErrorKind::DatasetError, "duplicate claim id " + c.id);
    }
    std::vector<std::string> keys;
    for (const auto& s : spec.strategies) {
        validate(s);
        keys.push_back(s.key());
    }

    BenchmarkOutcome outcome;
    outcome.manifest_path = spec.runs_dir / (spec.run_id + ".json");
    auto& manifest = outcome.manifest;
    if (std::filesystem::exists(outcome.manifest_path)) {
        if (!spec.resume) {
            throw Error(ErrorKind::InvalidConfig,
                        "run " + spec.run_id + " already exists at " + outcome.manifest_path.string() +
                            "; resume it or choose another run id");
        }
        manifest = RunManifest::load(outcome.manifest_path);
        if (manifest.dataset != spec.dataset || manifest.strategies != keys || manifest.claims != spec.claims.size()) {
            throw Error(ErrorKind::InvalidConfig, "run " + spec.run_id + " was started with a different dataset or strategy set");
        }
    } else {
        manifest.run_id = spec.run_id;
        manifest.dataset = spec.dataset;
        manifest.strategies = keys;
        manifest.claims = spec.claims.size();
        manifest.config = {{"debate", spec.options.config},
                           {"reflect_max_iterations", spec.options.reflect_max_iterations},
                           {"backend", gateway.backend().describe()}};
        manifest.created_at = text::utc_now_iso();
        manifest.updated_at = manifest.created_at;
        manifest.save(outcome.manifest_path);
    }

    struct Task {
        const Claim* claim;
        const StrategySpec* strategy;
    };
    std::vector<Task> pending;
    for (const auto& c : spec.claims) {
        for (const auto& s : spec.strategies) {
            if (!manifest.entries.contains({c.id, s.key()})) pending.push_back(Task{&c, &s});
        }
    }
    outcome.remaining_at_start = pending.size();
    const auto limit = std::min(pending.size(), spec.max_tasks.value_or(pending.size()));

    // In-flight tasks always finish so that nothing they paid for is lost.
    auto options = spec.options;
    options.stop = {};
    options.observer = nullptr;

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    auto worker = [&] {
        while (!abort.load() && !spec.stop.stop_requested()) {
            const auto i = next.fetch_add(1);
            if (i >= limit) return;
            const auto& task = pending[i];
            ManifestEntry entry;
            entry.claim_id = task.claim->id;
            entry.strategy = task.strategy->key();
            entry.gold = *task.claim->gold_label;
            ModelSession session(gateway, entry.claim_id + "/" + entry.strategy);
            try {
                entry.prediction = predict(session, *task.claim, *task.strategy, options);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::PredictionFailed) {
                    std::lock_guard lock(mu);
                    if (!abort.exchange(true)) outcome.abort_reason = e.what();
                    return;
                }
                entry.error = e.what();
            }
            std::lock_guard lock(mu);
            auto key = std::make_pair(entry.claim_id, entry.strategy);
            const auto& stored = manifest.entries.insert_or_assign(std::move(key), std::move(entry)).first->second;
            manifest.updated_at = text::utc_now_iso();
            manifest.save(outcome.manifest_path);
            ++outcome.executed;
            if (spec.on_progress) spec.on_progress(stored, manifest.entries.size(), manifest.tasks());
        }
    };
    {
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(spec.concurrency), std::max<std::size_t>(limit, 1));
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
        worker();
    }
    outcome.aborted = abort.load();
    return outcome;
}

// ---------------------------------------------------------------------------

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
    return buf;
}

std::vector<ReportBlock> build_report(std::span<const RunManifest> manifests, Averaging averaging) {
    std::map<std::string, std::map<std::string, std::vector<Scored>>> grouped;
    std::vector<std::string> dataset_order;
    for (const auto& m : manifests) {
        if (!grouped.contains(m.dataset)) dataset_order.push_back(m.dataset);
        auto& by_strategy = grouped[m.dataset];
        for (const auto& [_, e] : m.entries) {
            by_strategy[e.strategy].push_back(
                Scored{e.gold, e.prediction ? std::optional<Label>(e.prediction->label) : std::nullopt});
        }
    }

    std::vector<std::string> order;
    for (const auto& s : all_strategies()) order.push_back(s.key());

    std::vector<ReportBlock> blocks;
    for (const auto& name : dataset_order) {
        ReportBlock block{name, {}};
        auto& by_strategy = grouped[name];
        std::vector<std::string> keys;
        for (const auto& k : order) {
            if (by_strategy.contains(k)) keys.push_back(k);
        }
        for (const auto& [k, _] : by_strategy) {
            if (std::find(order.begin(), order.end(), k) == order.end()) keys.push_back(k);
        }
        for (const auto& k : keys) {
            const auto& items = by_strategy[k];
            ReportRow row;
            row.strategy = k;
            try {
                row.display = parse_strategy(k).display();
            } catch (const Error&) {
                row.display = k;
            }
            try {
                row.metrics = compute_metrics(items, averaging);
                row.skipped = row.metrics->skipped;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::EmptyEvaluation) throw;
                row.skipped = items.size();
            }
            block.rows.push_back(std::move(row));
        }
        blocks.push_back(std::move(block));
    }
    return blocks;
}

std::string render_report_text(std::span<const ReportBlock> blocks) {
    std::ostringstream os;
    char line[160];
    for (const auto& block : blocks) {
        os << "Dataset: " << block.dataset << "\n";
        std::snprintf(line, sizeof line, "%-18s %7s %7s %7s %7s %8s\n", "Method", "Acc", "Prec", "Rec", "F1", "Skipped");
        os << line;
        for (const auto& row : block.rows) {
            if (row.metrics) {
                const auto& m = *row.metrics;
                std::snprintf(line, sizeof line, "%-18s %7s %7s %7s %7s %8zu\n", row.display.c_str(),
                              percent(m.accuracy).c_str(), percent(m.precision).c_str(), percent(m.recall).c_str(),
                              percent(m.f1).c_str(), row.skipped);
            } else {
                std::snprintf(line, sizeof line, "%-18s %7s %7s %7s %7s %8zu\n", row.display.c_str(), "n/a", "n/a",
                              "n/a", "n/a", row.skipped);
            }
            os << line;
        }
        os << "\n";
    }
    os << "Positive class: fake. Skipped predictions are excluded from the metrics.\n";
    return os.str();
}

nlohmann::json render_report_json(std::span<const ReportBlock> blocks) {
    auto datasets = nlohmann::json::array();
    for (const auto& block : blocks) {
        auto rows = nlohmann::json::array();
        for (const auto& row : block.rows) {
            nlohmann::json r{{"strategy", row.strategy}, {"display", row.display}, {"skipped", row.skipped}};
            r["metrics"] = row.metrics ? nlohmann::json(*row.metrics) : nlohmann::json(nullptr);
            rows.push_back(std::move(r));
        }
        datasets.push_back({{"dataset", block.dataset}, {"rows", rows}});
    }
    return {{"positive_class", "fake"}, {"datasets", datasets}};
}

}  // namespace ed2d
