#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace ed2d {

// Bumped together with the record schema whenever the layout changes.
inline constexpr int kTranscriptFormatVersion = 1;

// Human-readable debate transcript: header, one section per stage (all five
// headers always appear), verdict footer. Depends only on the record document.
std::string render_transcript(const nlohmann::json& record);

// Single-result view for the non-debate strategies.
std::string render_prediction(const nlohmann::json& prediction);

}  // namespace ed2d
