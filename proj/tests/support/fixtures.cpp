#include "fixtures.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

namespace ed2d::testing {

std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(ED2D_FIXTURES_DIR) / name; }
std::filesystem::path golden(const std::string& name) { return std::filesystem::path(ED2D_GOLDEN_DIR) / name; }

bool update_golden() {
    const char* v = std::getenv("ED2D_UPDATE_GOLDEN");
    return v != nullptr && std::string(v) == "1";
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << content;
}

ScriptTable debate_table() { return ScriptTable::load(fixture("ed2d_script.json")); }

ScriptTable replacing(const ScriptTable& base, const std::string& tag, const std::vector<ScriptEntry>& entries) {
    ScriptTable out;
    out.strict = base.strict;
    for (const auto& e : entries) out.add(e);
    const auto doc = base.to_json();
    for (const auto& e : doc.at("entries")) {
        if (e.at("tag").get<std::string>() == tag) continue;
        ScriptEntry entry;
        entry.tag = e.at("tag").get<std::string>();
        entry.ordinal = e.value("ordinal", 0);
        entry.scope = e.value("scope", std::string{});
        const auto& c = e.at("content");
        entry.content = c.is_string() ? c.get<std::string>() : c.dump();
        out.add(std::move(entry));
    }
    return out;
}

std::shared_ptr<StaticSource> evidence_source() { return StaticSource::load(fixture("evidence.json")); }

Claim plume_claim(const std::string& id) {
    Claim c;
    c.id = id;
    c.text = "Flushing a toilet with the lid open sprays germs into the air.";
    return c;
}

Scripted::Scripted(ScriptTable table, GatewayOptions options)
    : backend(std::make_shared<ScriptedBackend>(std::move(table))),
      gateway(std::make_unique<Gateway>(backend, options)) {}

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ed2d-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::string words(int tokens, const std::string& word) {
    std::string s;
    for (int i = 0; i < tokens; ++i) s += (i ? " " : "") + word;
    return s;
}

}  // namespace ed2d::testing
