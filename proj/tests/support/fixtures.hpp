#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ed2d/evidence.hpp"
#include "ed2d/gateway.hpp"
#include "ed2d/types.hpp"

namespace ed2d::testing {

std::filesystem::path fixture(const std::string& name);
std::filesystem::path golden(const std::string& name);
bool update_golden();

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

// Scripted responses for a full debate on the toilet-plume claim, plus the
// baseline tags. Every entry has an empty scope, so it answers any session.
ScriptTable debate_table();

// `base` with every entry for `tag` removed and `entries` added in front.
ScriptTable replacing(const ScriptTable& base, const std::string& tag, const std::vector<ScriptEntry>& entries);

std::shared_ptr<StaticSource> evidence_source();

Claim plume_claim(const std::string& id = "c1");

struct Scripted {
    std::shared_ptr<ScriptedBackend> backend;
    std::unique_ptr<Gateway> gateway;

    explicit Scripted(ScriptTable table, GatewayOptions options = {});
};

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// A string of exactly `tokens` word tokens.
std::string words(int tokens, const std::string& word = "word");

}  // namespace ed2d::testing
