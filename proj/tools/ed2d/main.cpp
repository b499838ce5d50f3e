// ed2d: command-line front end for detection, benchmarking, serving and replay.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ed2d/baselines.hpp"
#include "ed2d/error.hpp"
#include "ed2d/eval.hpp"
#include "ed2d/http_backend.hpp"
#include "ed2d/service.hpp"
#include "ed2d/settings.hpp"
#include "ed2d/text.hpp"
#include "ed2d/transcript.hpp"

namespace {

// sysexits-style codes
constexpr int kExitOk = 0;
constexpr int kExitPipeline = 2;
constexpr int kExitUsage = 64;
constexpr int kExitDataErr = 65;
constexpr int kExitNoInput = 66;
constexpr int kExitUnavailable = 69;
constexpr int kExitSoftware = 70;
constexpr int kExitIo = 74;
constexpr int kExitConfig = 78;

constexpr const char* kExitHelp =
    "Exit codes:\n"
    "  0   success (a verdict or report was produced)\n"
    "  2   pipeline failure (no verdict, or benchmark aborted; resume with --resume)\n"
    "  64  usage error (bad flag, unknown strategy)\n"
    "  65  malformed input data (dataset line, record document)\n"
    "  66  input file not found\n"
    "  69  service unavailable (port cannot be bound)\n"
    "  70  internal error\n"
    "  74  I/O error\n"
    "  78  configuration error\n";

std::atomic<bool> g_signalled{false};

extern "C" void on_signal(int) { g_signalled.store(true); }

void install_signal_handlers() {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
}

// Polls the signal flag and runs `action` once it is raised.
std::jthread signal_watcher(std::function<void()> action) {
    return std::jthread([action = std::move(action)](std::stop_token st) {
        while (!st.stop_requested()) {
            if (g_signalled.load()) {
                action();
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
    });
}

int exit_code_for(const ed2d::Error& e) {
    using ed2d::ErrorKind;
    switch (e.kind()) {
        case ErrorKind::NotFound: return kExitNoInput;
        case ErrorKind::DatasetError:
        case ErrorKind::CountMismatch:
        case ErrorKind::Validation: return kExitDataErr;
        case ErrorKind::InvalidConfig: return kExitConfig;
        case ErrorKind::InvalidRequest:
        case ErrorKind::InvalidClaim: return kExitUsage;
        case ErrorKind::Io: return kExitIo;
        default: return kExitPipeline;
    }
}

struct Globals {
    std::string config_path;
    bool verbose = false;
    std::string backend;
    std::string script;
    std::vector<std::string> sets;
};

ed2d::Settings resolve(const Globals& g, std::vector<std::pair<std::string, std::string>> overrides) {
    std::vector<std::pair<std::string, std::string>> all;
    for (const auto& s : g.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ed2d::Error(ed2d::ErrorKind::InvalidRequest, "--set expects key=value, got '" + s + "'");
        }
        all.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!g.backend.empty()) all.emplace_back("backend.kind", g.backend);
    if (!g.script.empty()) {
        all.emplace_back("backend.script", g.script);
        if (g.backend.empty()) all.emplace_back("backend.kind", "scripted");
    }
    for (auto& o : overrides) all.push_back(std::move(o));
    std::optional<std::filesystem::path> file;
    if (!g.config_path.empty()) file = g.config_path;
    auto settings = ed2d::load_settings(file, ed2d::process_env(), all);
    spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::from_str(settings.str("log.level")));
    if (g.verbose) std::cerr << "effective config:\n" << settings.dump(true).dump(2) << "\n";
    return settings;
}

std::shared_ptr<ed2d::Gateway> make_gateway(const ed2d::Settings& s) {
    const auto descriptor = s.backend();
    if (const auto* http = std::get_if<ed2d::HttpEndpoint>(&descriptor.target); http && http->api_key.empty()) {
        throw ed2d::Error(ed2d::ErrorKind::InvalidConfig,
                          "no API key for the HTTP backend; set ED2D_BACKEND_API_KEY or OPENAI_API_KEY, "
                          "or use --script for the scripted backend");
    }
    return std::make_shared<ed2d::Gateway>(ed2d::make_backend(descriptor));
}

std::shared_ptr<ed2d::EvidenceRetriever> make_evidence(const ed2d::Settings& s) {
    std::shared_ptr<ed2d::KnowledgeSource> source;
    if (const auto fixture = s.str("evidence.fixture"); !fixture.empty()) {
        source = ed2d::StaticSource::load(fixture);
    } else {
        source = std::make_shared<ed2d::WikipediaSource>(s.wikipedia());
        if (const auto dir = s.str("evidence.cache_dir"); !dir.empty()) {
            source = std::make_shared<ed2d::CachedSource>(source, std::make_shared<ed2d::EvidenceCache>(dir));
        }
    }
    return std::make_shared<ed2d::EvidenceRetriever>(source, s.evidence_options());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ed2d::Error(ed2d::ErrorKind::Io, "cannot write " + path.string());
    out << content;
}

// ---------------------------------------------------------------------------

struct DetectArgs {
    std::string claim;
    std::string strategy = "ed2d";
    bool evidence = false;
    std::string out;
    bool json = false;
};

int cmd_detect(const Globals& g, const DetectArgs& a) {
    auto key = ed2d::text::to_lower(a.strategy);
    if (a.evidence && key != "ed2d" && !key.ends_with("+ev")) key += "+ev";
    ed2d::StrategySpec spec;
    try {
        spec = ed2d::parse_strategy(key);
    } catch (const ed2d::Error& e) {
        std::cerr << "ed2d detect: " << e.what() << "\n";
        return kExitUsage;
    }
    const auto settings = resolve(g, {});
    auto gateway = make_gateway(settings);
    std::shared_ptr<ed2d::EvidenceRetriever> evidence;
    if (spec.with_evidence) evidence = make_evidence(settings);

    ed2d::Claim claim;
    claim.id = "cli";
    claim.text = a.claim;
    ed2d::StrategyOptions options;
    options.config = settings.debate_config();
    options.reflect_max_iterations = static_cast<int>(settings.integer("debate.reflect_max_iterations"));
    options.evidence = evidence.get();
    std::stop_source stop;
    options.stop = stop.get_token();
    install_signal_handlers();
    auto watcher = signal_watcher([&] { stop.request_stop(); });

    ed2d::ModelSession session(*gateway, claim.id + "/" + spec.key());
    const bool debate = spec.strategy == ed2d::Strategy::D2D || spec.strategy == ed2d::Strategy::ED2D;
    try {
        const auto prediction = ed2d::predict(session, claim, spec, options);
        nlohmann::json doc = debate ? *prediction.record : nlohmann::json(prediction);
        if (!a.out.empty()) write_file(a.out, doc.dump(2) + "\n");
        if (a.json) std::cout << doc.dump(2) << "\n";
        else std::cout << (debate ? ed2d::render_transcript(doc) : ed2d::render_prediction(doc));
        return kExitOk;
    } catch (const ed2d::Error& e) {
        if (e.kind() == ed2d::ErrorKind::InvalidConfig || e.kind() == ed2d::ErrorKind::InvalidClaim) throw;
        if (debate && !e.details().empty()) {
            auto doc = nlohmann::json::parse(e.details().front(), nullptr, false);
            if (!doc.is_discarded()) {
                if (!a.out.empty()) write_file(a.out, doc.dump(2) + "\n");
                if (!a.json) std::cout << ed2d::render_transcript(doc);
            }
        }
        std::cerr << "ed2d detect: " << e.what() << "\n";
        return kExitPipeline;
    }
}

// ---------------------------------------------------------------------------

struct BenchArgs {
    std::string dataset;
    std::string preset;
    std::string name;
    std::string strategies = "zs,cot,sr,smad,d2d,ed2d";
    int concurrency = 0;
    bool resume = false;
    std::string run_id;
    std::string runs_dir;
    std::string report;
    bool macro = false;
    std::size_t max_tasks = 0;
};

int cmd_bench(const Globals& g, const BenchArgs& a) {
    std::vector<std::pair<std::string, std::string>> overrides;
    if (!a.runs_dir.empty()) overrides.emplace_back("bench.runs_dir", a.runs_dir);
    if (a.concurrency > 0) overrides.emplace_back("bench.concurrency", std::to_string(a.concurrency));
    const auto settings = resolve(g, overrides);

    std::vector<ed2d::StrategySpec> specs;
    std::string joined;
    std::stringstream list(a.strategies);
    for (std::string item; std::getline(list, item, ',');) {
        item = ed2d::text::trim(item);
        if (item.empty()) continue;
        try {
            specs.push_back(ed2d::parse_strategy(item));
        } catch (const ed2d::Error& e) {
            std::cerr << "ed2d bench: " << e.what() << "\n";
            return kExitUsage;
        }
        joined += (joined.empty() ? "" : ",") + specs.back().key();
    }
    if (specs.empty()) {
        std::cerr << "ed2d bench: no strategies selected\n";
        return kExitUsage;
    }

    ed2d::DatasetDescriptor descriptor;
    if (!a.preset.empty()) {
        auto preset = ed2d::dataset_preset(a.preset, a.dataset);
        if (!preset) {
            std::cerr << "ed2d bench: unknown preset '" << a.preset << "' (snopes25, fakenewsdataset, weibo21)\n";
            return kExitUsage;
        }
        descriptor = *preset;
    } else {
        descriptor.path = a.dataset;
    }
    descriptor.name = !a.name.empty() ? a.name : !a.preset.empty() ? descriptor.name
                                                                   : std::filesystem::path(a.dataset).stem().string();
    const auto loaded = ed2d::load_dataset(descriptor);
    for (const auto& w : loaded.warnings) spdlog::warn("{}", w);

    auto gateway = make_gateway(settings);
    std::shared_ptr<ed2d::EvidenceRetriever> evidence;
    for (const auto& s : specs) {
        if (s.with_evidence && !evidence) evidence = make_evidence(settings);
    }

    ed2d::BenchmarkSpec spec;
    spec.run_id = !a.run_id.empty()
                      ? a.run_id
                      : descriptor.name + "-" + ed2d::text::hex64(ed2d::text::fnv1a64(joined)).substr(0, 8);
    spec.dataset = descriptor.name;
    spec.claims = loaded.claims;
    spec.strategies = specs;
    spec.concurrency = static_cast<int>(settings.integer("bench.concurrency"));
    spec.resume = a.resume;
    spec.runs_dir = settings.str("bench.runs_dir");
    spec.options.config = settings.debate_config();
    spec.options.reflect_max_iterations = static_cast<int>(settings.integer("debate.reflect_max_iterations"));
    spec.options.evidence = evidence.get();
    if (a.max_tasks > 0) spec.max_tasks = a.max_tasks;
    std::stop_source stop;
    spec.stop = stop.get_token();
    spec.on_progress = [](const ed2d::ManifestEntry& e, std::size_t done, std::size_t total) {
        spdlog::debug("[{}/{}] {} {} -> {}", done, total, e.claim_id, e.strategy,
                      e.prediction ? std::string(ed2d::to_string(e.prediction->label)) : "skipped");
    };
    install_signal_handlers();
    auto watcher = signal_watcher([&] {
        std::cerr << "interrupted; finishing running tasks\n";
        stop.request_stop();
    });

    {
        const auto path = spec.runs_dir / (spec.run_id + ".json");
        std::size_t remaining = spec.claims.size() * specs.size();
        if (a.resume && std::filesystem::exists(path)) remaining = ed2d::RunManifest::load(path).remaining();
        std::cout << "run " << spec.run_id << ": " << remaining << " remaining\n";
    }
    const auto outcome = ed2d::run_benchmark(*gateway, spec);

    const std::vector<ed2d::RunManifest> manifests{outcome.manifest};
    const auto blocks = ed2d::build_report(manifests, a.macro ? ed2d::Averaging::Macro : ed2d::Averaging::Binary);
    std::cout << ed2d::render_report_text(blocks);
    const auto report_path = !a.report.empty() ? std::filesystem::path(a.report)
                                               : spec.runs_dir / (spec.run_id + ".report.json");
    write_file(report_path, ed2d::render_report_json(blocks).dump(2) + "\n");
    std::cout << "manifest: " << outcome.manifest_path.string() << "\nreport: " << report_path.string() << "\n";

    if (outcome.aborted) {
        std::cerr << "ed2d bench: aborted: " << outcome.abort_reason << "\n"
                  << outcome.manifest.remaining() << " tasks remain; rerun with --resume --run-id "
                  << spec.run_id << "\n";
        return kExitPipeline;
    }
    if (!outcome.manifest.complete()) {
        std::cerr << outcome.manifest.remaining() << " tasks remain; rerun with --resume --run-id " << spec.run_id
                  << "\n";
        return g_signalled.load() ? kExitPipeline : kExitOk;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ServeArgs {
    std::string host;
    int port = -1;
    std::string storage;
    std::string static_dir;
};

int cmd_serve(const Globals& g, const ServeArgs& a) {
    std::vector<std::pair<std::string, std::string>> overrides;
    if (!a.host.empty()) overrides.emplace_back("service.host", a.host);
    if (a.port >= 0) overrides.emplace_back("service.port", std::to_string(a.port));
    if (!a.storage.empty()) overrides.emplace_back("service.storage", a.storage);
    if (!a.static_dir.empty()) overrides.emplace_back("service.static_dir", a.static_dir);
    const auto settings = resolve(g, overrides);

    auto gateway = make_gateway(settings);
    std::shared_ptr<ed2d::EvidenceRetriever> evidence;
    if (settings.boolean("evidence.enabled")) evidence = make_evidence(settings);
    ed2d::service::DebateService service(settings.service_options(), gateway, evidence);
    ed2d::service::HttpServer server(service);

    const auto host = settings.str("service.host");
    const auto port = static_cast<int>(settings.integer("service.port"));
    if (!server.bind(host, port)) {
        std::cerr << "ed2d serve: cannot bind " << host << ":" << port << "\n";
        return kExitUnavailable;
    }
    service.start();
    install_signal_handlers();
    auto watcher = signal_watcher([&] {
        spdlog::info("shutting down");
        server.stop();
    });
    std::cout << "listening on http://" << host << ":" << server.port() << std::endl;
    server.run();
    service.shutdown();
    return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_replay(const std::string& file, bool json) {
    std::ifstream in(file);
    if (!in) {
        std::cerr << "ed2d replay: record not found: " << file << "\n";
        return kExitNoInput;
    }
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
        std::cerr << "ed2d replay: " << file << " is not valid JSON\n";
        return kExitDataErr;
    }
    if (!doc.contains("utterances") && doc.contains("record") && doc["record"].is_object()) doc = doc["record"];
    if (json) {
        std::cout << doc.dump(2) << "\n";
        return kExitOk;
    }
    std::cout << ed2d::render_transcript(doc);
    return kExitOk;
}

int cmd_config(const Globals& g, bool sources) {
    const auto settings = resolve(g, {});
    if (!sources) {
        std::cout << settings.dump(true).dump(2) << "\n";
        return kExitOk;
    }
    const auto doc = settings.dump(true);
    for (const auto& key : ed2d::Settings::keys()) {
        const auto dot = key.find('.');
        std::cout << key << " = " << doc[key.substr(0, dot)][key.substr(dot + 1)].dump() << "  (" << settings.source(key)
                  << "; " << ed2d::Settings::env_name(key) << ")\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("ed2d"));

    CLI::App app{"Evidence-grounded multi-agent debate for claim verification"};
    app.footer(kExitHelp);
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "JSON config file (default ./ed2d.json when present)");
    app.add_flag("-v,--verbose", g.verbose, "Debug logging; print the effective config (secrets redacted)");
    app.add_option("--backend", g.backend, "Model backend: http or scripted")->check(CLI::IsMember({"http", "scripted"}));
    app.add_option("--script", g.script, "Script table for the scripted backend (implies --backend scripted)");
    app.add_option("--set", g.sets, "Override any setting, key=value (repeatable)")->allow_extra_args(false);

    DetectArgs detect;
    auto* cmd = app.add_subcommand("detect", "Check one claim and print the transcript or prediction");
    cmd->add_option("claim", detect.claim, "Claim text")->required();
    cmd->add_option("-s,--strategy", detect.strategy, "zs, cot, sr, smad, d2d or ed2d; append +ev for evidence");
    cmd->add_flag("-e,--evidence", detect.evidence, "Use retrieved evidence (baselines)");
    cmd->add_option("-o,--out", detect.out, "Write the record or prediction JSON here");
    cmd->add_flag("--json", detect.json, "Print JSON instead of the transcript");

    BenchArgs bench;
    auto* bcmd = app.add_subcommand("bench", "Run strategies over a labelled dataset and report metrics");
    bcmd->add_option("-d,--dataset", bench.dataset, "JSON Lines dataset")->required();
    bcmd->add_option("--preset", bench.preset, "Verify counts against snopes25, fakenewsdataset or weibo21");
    bcmd->add_option("--name", bench.name, "Dataset name in reports (default: preset or file stem)");
    bcmd->add_option("--strategies", bench.strategies, "Comma-separated strategy keys");
    bcmd->add_option("-j,--concurrency", bench.concurrency, "Worker count (default bench.concurrency)");
    bcmd->add_flag("--resume", bench.resume, "Continue an existing run");
    bcmd->add_option("--run-id", bench.run_id, "Run identifier (default derived from dataset and strategies)");
    bcmd->add_option("--runs-dir", bench.runs_dir, "Manifest directory (default bench.runs_dir)");
    bcmd->add_option("--report", bench.report, "Report JSON path (default <runs>/<run>.report.json)");
    bcmd->add_flag("--macro", bench.macro, "Macro-average precision, recall and F1 over both classes");
    bcmd->add_option("--max-tasks", bench.max_tasks, "Stop after dispatching this many tasks");

    ServeArgs serve;
    auto* scmd = app.add_subcommand("serve", "Run the HTTP service");
    scmd->add_option("--host", serve.host, "Bind address (default service.host)");
    scmd->add_option("-p,--port", serve.port, "Port (default service.port; 0 picks a free port)");
    scmd->add_option("--storage", serve.storage, "Job storage directory");
    scmd->add_option("--static-dir", serve.static_dir, "Serve web assets from this directory");

    std::string replay_file;
    bool replay_json = false;
    auto* rcmd = app.add_subcommand("replay", "Render a stored debate record as a transcript");
    rcmd->add_option("record", replay_file, "Record JSON file")->required();
    rcmd->add_flag("--json", replay_json, "Print the record document instead");

    bool sources = false;
    auto* ccmd = app.add_subcommand("config", "Print the effective configuration (secrets redacted)");
    ccmd->add_flag("--sources", sources, "One line per key with its origin and environment variable");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*cmd) return cmd_detect(g, detect);
        if (*bcmd) return cmd_bench(g, bench);
        if (*scmd) return cmd_serve(g, serve);
        if (*rcmd) return cmd_replay(replay_file, replay_json);
        if (*ccmd) return cmd_config(g, sources);
    } catch (const ed2d::Error& e) {
        std::cerr << "ed2d: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "ed2d: internal error: " << e.what() << "\n";
        return kExitSoftware;
    }
    return kExitUsage;
}
