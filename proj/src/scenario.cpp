#include "discovery/scenario.hpp"
#include "discovery/json_util.hpp"

#include <fstream>

#include "discovery/selection.hpp"
#include "discovery/wire.hpp"

namespace discovery {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& what) { throw Error(Errc::scenario_parse_error, what); }

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) parse_fail("cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) parse_fail(path.string() + " is not valid JSON");
    return j;
}

void check_step_shape(const json& step, std::size_t index) {
    const std::string where = "step " + std::to_string(index);
    if (!step.is_object()) parse_fail(where + " must be an object");
    int kinds = 0;
    for (const char* k : {"event", "query", "assert", "select"}) kinds += step.contains(k) ? 1 : 0;
    if (kinds != 1) parse_fail(where + " needs exactly one of event, query, assert or select");
    if (step.contains("event")) {
        try {
            (void)event_from_json(step["event"]);
        } catch (const Error& e) {
            parse_fail(where + ": " + e.what());
        }
    }
    if (step.contains("query") && !step["query"].is_object()) parse_fail(where + ": query must be an object");
    if (step.contains("assert")) {
        const json& a = step["assert"];
        if (!a.is_object() || !a.contains("path") || !a["path"].is_string())
            parse_fail(where + ": assert needs a string 'path'");
        try {
            (void)json::json_pointer(a["path"].get<std::string>());
        } catch (const json::exception& e) {
            parse_fail(where + ": bad JSON pointer: " + e.what());
        }
        int checks = 0;
        for (const char* k : {"equals", "size", "absent", "exists", "none_match"})
            checks += a.contains(k) ? 1 : 0;
        if (checks != 1) parse_fail(where + ": assert needs exactly one check");
    }
    if (step.contains("select")) {
        const json& s = step["select"];
        if (!s.is_object() || !s.contains("seed") || !is_non_negative_integer(s["seed"]))
            parse_fail(where + ": select needs an unsigned 'seed'");
    }
}

struct AssertOutcome {
    bool ok = false;
    std::string check;
    json expected;
    json actual;
};

AssertOutcome run_assert(const json& spec, const json& last) {
    const json::json_pointer ptr(spec["path"].get<std::string>());
    const bool present = last.contains(ptr);
    const json actual = present ? last.at(ptr) : json(nullptr);
    AssertOutcome out;
    out.actual = actual;
    if (spec.contains("equals")) {
        out.check = "equals";
        out.expected = spec["equals"];
        out.ok = present && actual == spec["equals"];
    } else if (spec.contains("size")) {
        out.check = "size";
        out.expected = spec["size"];
        out.ok = present && (actual.is_array() || actual.is_object()) &&
                 is_non_negative_integer(spec["size"]) && actual.size() == spec["size"].get<std::size_t>();
        if (present && (actual.is_array() || actual.is_object())) out.actual = actual.size();
    } else if (spec.contains("absent")) {
        out.check = "absent";
        out.expected = spec["absent"];
        out.ok = spec["absent"].is_boolean() && present != spec["absent"].get<bool>();
    } else if (spec.contains("exists")) {
        out.check = "exists";
        out.expected = spec["exists"];
        out.ok = spec["exists"].is_boolean() && present == spec["exists"].get<bool>();
    } else {
        out.check = "none_match";
        out.expected = spec["none_match"];
        out.ok = present && actual.is_array();
        if (out.ok)
            for (const auto& element : actual) {
                if (!element.is_object()) continue;
                bool all = true;
                for (const auto& [k, v] : spec["none_match"].items())
                    all = all && element.contains(k) && element[k] == v;
                if (all) {
                    out.ok = false;
                    break;
                }
            }
    }
    return out;
}

json run_select(const json& spec, const json& last) {
    const json id = "";
    try {
        if (!last.is_object() || !last.value("ok", false) || !last.contains("result") ||
            !last["result"].contains("descriptors"))
            throw Error(Errc::invalid_query, "select needs a successful endorsement response");
        const auto index = spec.value("descriptor", std::size_t{0});
        const json& descriptors = last["result"]["descriptors"];
        if (index >= descriptors.size()) throw Error(Errc::invalid_query, "descriptor index out of range");
        SelectionStrategy strategy;
        strategy.peers = peer_choice_from_string(spec.value("strategy", std::string("random")));
        strategy.layout = layout_choice_from_string(spec.value("layout", std::string("first")));
        if (spec.contains("deny"))
            for (const auto& p : spec["deny"]) strategy.deny.insert(p.get<std::string>());
        const auto result = select_endorsers(descriptor_from_json(descriptors[index]), strategy,
                                             spec["seed"].get<std::uint64_t>());
        return {{"ok", true}, {"result", to_json(result)}};
    } catch (const Error& e) {
        return {{"ok", false}, {"error", {{"code", to_string(e.code())}, {"message", e.what()}}}};
    }
}

}  // namespace

ScenarioScript parse_scenario(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) parse_fail("scenario must be a JSON object");
    if (!j.contains("network")) parse_fail("scenario needs 'network'");
    ScenarioScript script;
    try {
        const json& net = j["network"];
        if (net.is_string()) {
            std::filesystem::path p = net.get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            script.network = load_network_file(p);
        } else {
            script.network = new_network(net);
        }
    } catch (const Error& e) {
        parse_fail(std::string("scenario network: ") + e.what());
    }
    if (j.contains("responder")) {
        if (!j["responder"].is_string()) parse_fail("'responder' must be a string");
        script.responder = j["responder"].get<std::string>();
    } else if (!script.network.peers.empty()) {
        script.responder = script.network.peers.begin()->first;
    }
    if (!script.network.peers.count(script.responder))
        parse_fail("responder '" + script.responder + "' is not in the network");
    if (j.contains("layout_cap")) {
        if (!is_non_negative_integer(j["layout_cap"]) || j["layout_cap"].get<std::size_t>() < 1)
            parse_fail("'layout_cap' must be a positive integer");
        script.options.layout_cap = j["layout_cap"].get<std::size_t>();
    }
    if (j.contains("strict_channel")) script.options.strict_channel = j["strict_channel"].get<bool>();
    if (j.contains("steps")) {
        if (!j["steps"].is_array()) parse_fail("'steps' must be an array");
        for (std::size_t i = 0; i < j["steps"].size(); ++i) {
            check_step_shape(j["steps"][i], i);
            script.steps.push_back(j["steps"][i]);
        }
    }
    return script;
}

ScenarioScript load_scenario(const std::filesystem::path& path) {
    return parse_scenario(read_json_file(path), path.parent_path());
}

std::string ScenarioResult::transcript_text() const {
    std::string out;
    for (const auto& line : transcript) {
        out += line;
        out += '\n';
    }
    return out;
}

ScenarioResult run_scenario(const ScenarioScript& script) {
    ScenarioResult result;
    if (script.steps.empty()) return result;

    auto network = std::make_shared<Network>(script.network);
    wire::Server server(network, wire::ServerConfig{script.responder, script.options, 1});
    server.start("127.0.0.1:0");
    wire::Connection conn(server.endpoint());

    json last = nullptr;
    auto fail = [&](Errc code, std::string message) {
        result.passed = false;
        result.failure_code = code;
        result.failure_message = std::move(message);
    };

    for (std::size_t i = 0; i < script.steps.size() && result.passed; ++i) {
        const json& step = script.steps[i];
        json line = {{"step", i}};
        if (step.contains("event")) {
            line["kind"] = "event";
            line["event"] = step["event"];
            const std::string expected_error = step.value("expect_error", std::string());
            try {
                line["event_seq"] = network->apply(event_from_json(step["event"]));
                line["ok"] = true;
                if (!expected_error.empty())
                    fail(Errc::assertion_failed, "step " + std::to_string(i) + ": expected error " +
                                                     expected_error + ", event applied");
            } catch (const Error& e) {
                line["ok"] = false;
                line["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
                if (expected_error != to_string(e.code()))
                    fail(e.code(), "step " + std::to_string(i) + ": " + e.what());
            }
        } else if (step.contains("query")) {
            json request = step["query"];
            if (!request.contains("id")) request["id"] = "q" + std::to_string(i);
            line["kind"] = "query";
            line["request"] = request;
            last = conn.request(request);
            line["response"] = last;
        } else if (step.contains("select")) {
            line["kind"] = "select";
            line["request"] = step["select"];
            last = run_select(step["select"], last);
            line["response"] = last;
        } else {
            const json& spec = step["assert"];
            const AssertOutcome outcome = run_assert(spec, last);
            line["kind"] = "assert";
            line["path"] = spec["path"];
            line["check"] = outcome.check;
            line["expected"] = outcome.expected;
            line["actual"] = outcome.actual;
            line["ok"] = outcome.ok;
            if (!outcome.ok)
                fail(Errc::assertion_failed,
                     "step " + std::to_string(i) + ": assertion " + outcome.check + " failed at " +
                         spec["path"].get<std::string>() + ": expected " + outcome.expected.dump() +
                         ", actual " + outcome.actual.dump());
        }
        result.transcript.push_back(line.dump());
    }
    server.stop();
    return result;
}

}  // namespace discovery
