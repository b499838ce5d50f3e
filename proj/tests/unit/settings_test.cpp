#include <gtest/gtest.h>

#include "ed2d/error.hpp"
#include "ed2d/settings.hpp"
#include "fixtures.hpp"

using namespace ed2d;
using namespace ed2d::testing;

namespace {

Settings::EnvLookup env_of(std::map<std::string, std::string> vars) {
    return [vars = std::move(vars)](const std::string& name) -> std::optional<std::string> {
        if (auto it = vars.find(name); it != vars.end()) return it->second;
        return std::nullopt;
    };
}

}  // namespace

TEST(Settings, EnvironmentNames) {
    EXPECT_EQ(Settings::env_name("backend.model"), "ED2D_BACKEND_MODEL");
    EXPECT_EQ(Settings::env_name("temperature.debate-utterance"), "ED2D_TEMPERATURE_DEBATE_UTTERANCE");
}

TEST(Settings, DefaultsMatchEngineDefaults) {
    const Settings s;
    const auto c = s.debate_config();
    EXPECT_EQ(c.judge_panel_size, 3);
    EXPECT_EQ(c.summary_budget, 256);
    EXPECT_EQ(c.context_budget, 8192);
    EXPECT_EQ(c.free_debate_rounds, 1);
    EXPECT_EQ(s.evidence_options().per_query, 3);
    EXPECT_EQ(s.evidence_options().segment_token_cap, 300);
    EXPECT_DOUBLE_EQ(c.temperatures.at(tag::kDebateUtterance), 0.7);
    EXPECT_EQ(s.source("backend.model"), "default");
}

TEST(Settings, FlagsBeatEnvironmentBeatFile) {
    TempDir dir;
    write_file(dir / "c.json", R"({"debate": {"free_debate_rounds": 2, "judge_panel_size": 5},
                                   "backend": {"model": "from-file"}, "service": {"port": 9000}})");
    const auto s = load_settings(dir / "c.json",
                                 env_of({{"ED2D_DEBATE_FREE_DEBATE_ROUNDS", "3"}, {"ED2D_BACKEND_MODEL", "from-env"}}),
                                 {{"backend.model", "from-flag"}});
    EXPECT_EQ(s.str("backend.model"), "from-flag");
    EXPECT_EQ(s.source("backend.model"), "flag");
    EXPECT_EQ(s.integer("debate.free_debate_rounds"), 3);
    EXPECT_EQ(s.source("debate.free_debate_rounds"), "env ED2D_DEBATE_FREE_DEBATE_ROUNDS");
    EXPECT_EQ(s.integer("debate.judge_panel_size"), 5);
    EXPECT_EQ(s.integer("service.port"), 9000);
    EXPECT_EQ(s.source("service.port"), (dir / "c.json").string());
}

TEST(Settings, RejectsUnknownKeysAndBadTypes) {
    Settings s;
    EXPECT_THROW(s.set("debate.rounds", "2"), Error);
    EXPECT_THROW(s.set("debate.judge_panel_size", "three"), Error);
    EXPECT_THROW(s.merge_json(nlohmann::json{{"evidence", {{"enabled", 3}}}}, "test"), Error);
    s.set("evidence.enabled", "off");
    EXPECT_FALSE(s.boolean("evidence.enabled"));
    s.set("debate.judge_panel_size", "4");
    EXPECT_THROW(s.debate_config(), Error);
}

TEST(Settings, MissingExplicitFileIsNotFound) {
    try {
        load_settings(std::filesystem::path("/nonexistent/ed2d.json"), env_of({}), {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotFound);
    }
}

TEST(Settings, OpenAiKeyIsAFallbackOnly) {
    auto s = load_settings(std::nullopt, env_of({{"OPENAI_API_KEY", "sk-fallback"}}), {});
    EXPECT_EQ(s.str("backend.api_key"), "sk-fallback");
    s = load_settings(std::nullopt, env_of({{"OPENAI_API_KEY", "sk-fallback"}, {"ED2D_BACKEND_API_KEY", "sk-own"}}), {});
    EXPECT_EQ(s.str("backend.api_key"), "sk-own");
}

TEST(Settings, DumpRedactsSecrets) {
    Settings s;
    s.set("backend.api_key", "sk-secret");
    const auto doc = s.dump();
    EXPECT_EQ(doc["backend"]["api_key"], "***");
    EXPECT_EQ(doc["service"]["api_key"], "");
    EXPECT_EQ(s.dump(false)["backend"]["api_key"], "sk-secret");
    EXPECT_EQ(doc.dump().find("sk-secret"), std::string::npos);
}

TEST(Settings, BackendDescriptor) {
    Settings s;
    s.set("backend.kind", "scripted");
    EXPECT_THROW(s.backend(), Error);
    s.set("backend.script", "x.json");
    EXPECT_TRUE(std::holds_alternative<ScriptSource>(s.backend().target));
    s.set("backend.kind", "carrier-pigeon");
    EXPECT_THROW(s.backend(), Error);
}

TEST(Settings, ServiceOptionsValidated) {
    Settings s;
    s.set("service.max_concurrent", "0");
    EXPECT_THROW(s.service_options(), Error);
    s.set("service.max_concurrent", "2");
    s.set("service.heartbeat_seconds", "5");
    const auto o = s.service_options();
    EXPECT_EQ(o.max_concurrent, 2u);
    EXPECT_EQ(o.heartbeat, std::chrono::seconds(5));
    EXPECT_EQ(o.rate_limit_per_minute, 10u);
}
