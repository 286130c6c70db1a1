#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "discovery/membership.hpp"
#include "discovery/service.hpp"

namespace discovery {

/// A scripted run against an embedded discovery server:
///
///   {"network": "net.json" | {...inline network file...},
///    "responder": "a1",
///    "steps": [
///      {"event": {"type": "PeerOffline", "args": {"peer": "b1"}}},
///      {"event": {...}, "expect_error": "height_regression"},
///      {"query": {"type": "endorsement", "channel": "ch1", "payload": {"chaincodes": ["cc"]}}},
///      {"select": {"strategy": "random", "layout": "first", "seed": 7, "descriptor": 0}},
///      {"assert": {"path": "/result/peers", "size": 7}}
///    ]}
///
/// Assertions look at the last query or select outcome through a JSON
/// pointer and support "equals", "size", "absent", "exists" and
/// "none_match" (no array element contains the given fields).
struct ScenarioScript {
    NetworkState network;
    std::string responder;
    ServiceOptions options;
    std::vector<nlohmann::json> steps;
};

/// Throws Error(scenario_parse_error); relative network paths resolve
/// against `base_dir`.
ScenarioScript parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ScenarioScript load_scenario(const std::filesystem::path& path);

struct ScenarioResult {
    std::vector<std::string> transcript;  // one JSON object per executed step
    bool passed = true;
    std::optional<Errc> failure_code;
    std::string failure_message;

    std::string transcript_text() const;
};

/// Runs every step in order and stops at the first failing step.
ScenarioResult run_scenario(const ScenarioScript& script);

}  // namespace discovery
