#include <gtest/gtest.h>

#include <cmath>

#include "ed2d/error.hpp"
#include "ed2d/eval.hpp"
#include "fixtures.hpp"

using namespace ed2d;
using namespace ed2d::testing;

namespace {

std::vector<Scored> hand_case() {
    return {{Label::Fake, Label::Fake}, {Label::Fake, Label::Fake}, {Label::Real, Label::Fake},
            {Label::Fake, Label::Real}, {Label::Real, Label::Real}};
}

BenchmarkSpec mini_spec(const std::filesystem::path& runs, const EvidenceRetriever& retriever,
                        std::vector<std::string> keys = {"zs", "cot+ev", "sr", "smad", "d2d", "ed2d"}) {
    BenchmarkSpec s;
    s.run_id = "mini";
    s.dataset = "mini";
    s.claims = load_dataset(DatasetDescriptor{"mini", fixture("mini.jsonl"), std::nullopt, true}).claims;
    for (const auto& k : keys) s.strategies.push_back(parse_strategy(k));
    s.runs_dir = runs;
    s.options.evidence = &retriever;
    return s;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::Io;
}

}  // namespace

TEST(Dataset, LoadsMixedLabelSpellings) {
    const auto d = load_dataset(DatasetDescriptor{"mini", fixture("mini.jsonl"), std::nullopt, true});
    ASSERT_EQ(d.claims.size(), 6u);
    std::vector<Label> labels;
    for (const auto& c : d.claims) labels.push_back(*c.gold_label);
    EXPECT_EQ(labels, (std::vector<Label>{Label::Real, Label::Fake, Label::Fake, Label::Real, Label::Fake, Label::Fake}));
    EXPECT_EQ(d.claims[3].metadata.at("source"), "archive");
    EXPECT_TRUE(d.warnings.empty());
}

TEST(Dataset, PresetsCarryPublishedCounts) {
    const auto s = dataset_preset("Snopes25", "x");
    ASSERT_TRUE(s && s->expected);
    EXPECT_EQ(s->expected->fake, 252u);
    EXPECT_EQ(s->expected->real, 196u);
    EXPECT_EQ(s->expected->total, 448u);
    const auto f = dataset_preset("fakenewsdataset", "x");
    EXPECT_EQ(f->expected->total, 932u);
    const auto w = dataset_preset("weibo21", "x");
    EXPECT_EQ(w->expected->fake + w->expected->real, 4834u);
    EXPECT_EQ(w->expected->total, 4843u);
    EXPECT_FALSE(w->strict_counts);
    EXPECT_FALSE(dataset_preset("liar", "x").has_value());
}

TEST(Dataset, CountMismatchIsStrictUnlessWarnOnly) {
    TempDir dir;
    write_file(dir / "s.jsonl", "{\"id\":1,\"text\":\"a\",\"label\":\"fake\"}\n");
    EXPECT_EQ(kind_of([&] { load_dataset(*dataset_preset("snopes25", dir / "s.jsonl")); }), ErrorKind::CountMismatch);
    const auto w = load_dataset(*dataset_preset("weibo21", dir / "s.jsonl"));
    EXPECT_EQ(w.claims.size(), 1u);
    ASSERT_EQ(w.warnings.size(), 2u);
    EXPECT_NE(w.warnings[0].find("2373 + 2461 != 4843"), std::string::npos);
    EXPECT_EQ(w.claims[0].id, "1");
}

TEST(Dataset, LineAccurateErrors) {
    TempDir dir;
    const auto p = dir / "bad.jsonl";
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"{\"id\":\"a\",\"text\":\"t\",\"label\":\"maybe\"}\n", ":1: unrecognised label \"maybe\""},
        {"\n{\"id\":\"a\",\"label\":\"real\"}\n", ":2: missing or empty \"text\""},
        {"{\"id\":\"a\",\"text\":\"t\",\"label\":\"real\"}\n[1,2]\n", ":2: not a JSON object"},
        {"{\"text\":\"t\",\"label\":\"real\"}\n", ":1: missing or invalid \"id\""},
    };
    for (const auto& [body, needle] : cases) {
        write_file(p, body);
        try {
            load_dataset(DatasetDescriptor{"x", p, std::nullopt, true});
            ADD_FAILURE() << needle;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::DatasetError);
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    }
    EXPECT_EQ(kind_of([&] { load_dataset(DatasetDescriptor{"x", dir / "absent.jsonl", std::nullopt, true}); }),
              ErrorKind::NotFound);
}

TEST(Metrics, HandCase) {
    const auto items = hand_case();
    const auto m = compute_metrics(items);
    EXPECT_EQ(m.matrix, (ConfusionMatrix{2, 1, 1, 1}));
    EXPECT_NEAR(m.accuracy, 0.6, 1e-9);
    EXPECT_NEAR(m.precision, 2.0 / 3.0, 1e-9);
    EXPECT_NEAR(m.recall, 2.0 / 3.0, 1e-9);
    EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-9);
    EXPECT_EQ(percent(m.f1), "66.67");
}

TEST(Metrics, MacroAveragesBothClasses) {
    const auto items = hand_case();
    const auto m = compute_metrics(items, Averaging::Macro);
    // Real as positive: tp 1, fp 1, fn 1.
    EXPECT_NEAR(m.precision, (2.0 / 3.0 + 0.5) / 2.0, 1e-9);
    EXPECT_NEAR(m.recall, (2.0 / 3.0 + 0.5) / 2.0, 1e-9);
    EXPECT_NEAR(m.f1, (2.0 / 3.0 + 0.5) / 2.0, 1e-9);
    EXPECT_NEAR(m.accuracy, 0.6, 1e-9);
}

TEST(Metrics, SkippedExcludedAndZeroDenominators) {
    std::vector<Scored> items = {{Label::Real, Label::Real}, {Label::Fake, std::nullopt}, {Label::Real, Label::Real}};
    const auto m = compute_metrics(items);
    EXPECT_EQ(m.evaluated, 2u);
    EXPECT_EQ(m.skipped, 1u);
    EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(m.precision, 0.0);
    EXPECT_DOUBLE_EQ(m.f1, 0.0);
    const std::vector<Scored> none = {{Label::Fake, std::nullopt}};
    EXPECT_EQ(kind_of([&] { compute_metrics(none); }), ErrorKind::EmptyEvaluation);
}

TEST(Report, PercentFormatting) {
    EXPECT_EQ(percent(0.8359), "83.59");
    EXPECT_EQ(percent(1.0), "100.00");
    EXPECT_EQ(percent(0.0), "0.00");
}

TEST(Benchmark, ScriptedRunMatchesGoldenReport) {
    TempDir dir;
    EvidenceRetriever retriever(evidence_source());
    auto table = debate_table();
    // ZS answers fake for m1..m3: one false positive, two true positives.
    for (const auto* id : {"m1", "m2", "m3"}) {
        table.add(ScriptEntry{"zs-answer", 0, std::string(id) + "/zs", R"({"label": "fake"})"});
    }
    Scripted s(std::move(table));
    const auto out = run_benchmark(*s.gateway, mini_spec(dir.path(), retriever));
    EXPECT_EQ(out.executed, 36u);
    EXPECT_TRUE(out.manifest.complete());
    EXPECT_EQ(out.manifest.config.at("backend"), "scripted");
    EXPECT_EQ(out.manifest.usage().calls, static_cast<std::int64_t>(s.gateway->call_count()));

    const std::vector<RunManifest> manifests{RunManifest::load(out.manifest_path)};
    const auto blocks = build_report(manifests);
    ASSERT_EQ(blocks.size(), 1u);
    ASSERT_EQ(blocks[0].rows.size(), 6u);
    EXPECT_EQ(blocks[0].rows[1].display, "CoT w/ evidence");
    const auto& zs = *blocks[0].rows[0].metrics;
    EXPECT_EQ(zs.matrix.tp, 2u);
    EXPECT_EQ(zs.matrix.fp, 1u);
    EXPECT_EQ(zs.matrix.fn, 2u);
    EXPECT_EQ(zs.matrix.tn, 1u);
    EXPECT_NEAR(zs.precision, 2.0 / 3.0, 1e-9);
    EXPECT_NEAR(zs.f1, 4.0 / 7.0, 1e-9);
    // Every other scripted answer is "real"; two of six gold labels are real.
    EXPECT_NEAR(blocks[0].rows[1].metrics->accuracy, 2.0 / 6.0, 1e-9);
    EXPECT_EQ(blocks[0].rows[1].metrics->matrix.fn, 4u);

    const auto text = render_report_text(blocks);
    const auto path = golden("mini_report.txt");
    if (update_golden()) write_file(path, text);
    EXPECT_EQ(text, read_file(path));
    EXPECT_EQ(render_report_json(blocks)["datasets"][0]["rows"].size(), 6u);
}

TEST(Benchmark, ConcurrencyDoesNotChangeResults) {
    TempDir dir;
    EvidenceRetriever retriever(evidence_source());
    Scripted one(debate_table()), eight(debate_table());
    auto a = mini_spec(dir / "a", retriever);
    a.concurrency = 1;
    auto b = mini_spec(dir / "b", retriever);
    b.concurrency = 8;
    const auto ra = run_benchmark(*one.gateway, a);
    const auto rb = run_benchmark(*eight.gateway, b);
    EXPECT_EQ(canonical_manifest(ra.manifest), canonical_manifest(rb.manifest));
    EXPECT_EQ(one.gateway->ledger().total(), eight.gateway->ledger().total());
}

TEST(Benchmark, ResumeSkipsCompletedTasks) {
    TempDir dir;
    EvidenceRetriever retriever(evidence_source());
    Scripted first(debate_table());
    auto spec = mini_spec(dir.path(), retriever, {"zs", "smad"});
    spec.max_tasks = 5;
    const auto part = run_benchmark(*first.gateway, spec);
    EXPECT_EQ(part.executed, 5u);
    EXPECT_EQ(part.manifest.remaining(), 7u);

    spec.max_tasks.reset();
    EXPECT_EQ(kind_of([&] { run_benchmark(*first.gateway, spec); }), ErrorKind::InvalidConfig);
    spec.resume = true;
    Scripted second(debate_table());
    const auto rest = run_benchmark(*second.gateway, spec);
    EXPECT_EQ(rest.remaining_at_start, 7u);
    EXPECT_EQ(rest.executed, 7u);
    EXPECT_EQ(second.gateway->call_count(), 3u * 1 + 4u * 5);  // smad for m3..m6, zs for m4..m6

    auto other = spec;
    other.strategies = {parse_strategy("cot")};
    EXPECT_EQ(kind_of([&] { run_benchmark(*second.gateway, other); }), ErrorKind::InvalidConfig);
}

TEST(Benchmark, PredictionFailureIsSkippedNotFatal) {
    TempDir dir;
    EvidenceRetriever retriever(evidence_source());
    auto table = replacing(debate_table(), "zs-answer", {ScriptEntry{"zs-answer", 0, "m2/zs", "unsure"},
                                                         ScriptEntry{"zs-answer", 0, "", R"({"label":"fake"})"}});
    Scripted s(table);
    const auto out = run_benchmark(*s.gateway, mini_spec(dir.path(), retriever, {"zs"}));
    EXPECT_FALSE(out.aborted);
    const auto& e = out.manifest.entries.at({"m2", "zs"});
    EXPECT_TRUE(e.skipped());
    EXPECT_FALSE(e.error.empty());
    const std::vector<RunManifest> manifests{out.manifest};
    const auto row = build_report(manifests)[0].rows[0];
    EXPECT_EQ(row.skipped, 1u);
    EXPECT_EQ(row.metrics->evaluated, 5u);
}

TEST(Benchmark, UnreachableBackendAbortsWithoutEntries) {
    class Down final : public Backend {
    public:
        ModelResponse complete(const ModelRequest&) override { throw Error(ErrorKind::BackendUnreachable, "refused"); }
        std::string describe() const override { return "down"; }
    };
    TempDir dir;
    EvidenceRetriever retriever(evidence_source());
    Gateway gateway(std::make_shared<Down>());
    const auto out = run_benchmark(gateway, mini_spec(dir.path(), retriever, {"zs"}));
    EXPECT_TRUE(out.aborted);
    EXPECT_TRUE(out.manifest.entries.empty());
    EXPECT_NE(out.abort_reason.find("refused"), std::string::npos);
}

TEST(Benchmark, RejectsBadSpecs) {
    TempDir dir;
    EvidenceRetriever retriever(evidence_source());
    Scripted s(debate_table());
    auto spec = mini_spec(dir.path(), retriever, {});
    EXPECT_EQ(kind_of([&] { run_benchmark(*s.gateway, spec); }), ErrorKind::InvalidConfig);
    spec = mini_spec(dir.path(), retriever, {"zs"});
    spec.claims[1].gold_label.reset();
    EXPECT_EQ(kind_of([&] { run_benchmark(*s.gateway, spec); }), ErrorKind::DatasetError);
    EXPECT_EQ(s.gateway->call_count(), 0u);
}
