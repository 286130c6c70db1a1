// discover: command-line front end for the discovery service.
//
// Every command writes JSON to stdout. Exit status: 0 success, 1 domain
// error, 2 usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "discovery/client.hpp"
#include "discovery/crypto.hpp"
#include "discovery/scenario.hpp"
#include "discovery/selection.hpp"
#include "discovery/wire.hpp"

namespace {

using nlohmann::json;
using namespace discovery;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::size_t layout_cap_from_env(std::size_t fallback) {
    const char* raw = std::getenv("DISCOVER_LAYOUT_CAP");
    if (!raw || !*raw) return fallback;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(raw, &used);
        if (used != std::string(raw).size() || v < 1) throw std::invalid_argument("cap");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw UsageError("DISCOVER_LAYOUT_CAP must be a positive integer");
    }
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::schema_error, path + " is not valid JSON");
    return j;
}

void emit(const json& j) { std::cout << j.dump() << '\n'; }

int emit_error(const Error& e) {
    emit({{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}});
    return 1;
}

struct ServeArgs {
    std::string network;
    std::string peer;
    std::string listen;
    bool strict_channel = false;
    bool strict_version = false;
    std::size_t threads = 4;
};

int run_serve(const ServeArgs& args) {
    ServiceOptions options;
    options.layout_cap = layout_cap_from_env(kDefaultLayoutCap);
    options.strict_channel = args.strict_channel;
    options.strict_version = args.strict_version;
    auto network = std::make_shared<Network>(load_network_file(args.network));
    wire::Server server(network, {args.peer, options, args.threads});
    server.start(args.listen);
    emit({{"listening", server.endpoint()}, {"peer", args.peer}});
    std::cout.flush();
    server.wait();
    return 0;
}

struct QueryArgs {
    std::string type;
    std::string server;
    std::string channel;
    std::vector<std::string> chaincodes;
    std::string id = "1";
};

int run_query(const QueryArgs& args) {
    static const std::map<std::string, std::string> kTypes{{"config", "config"},
                                                           {"members", "peer_membership"},
                                                           {"endorsers", "endorsement"},
                                                           {"local", "local_membership"}};
    json query = {{"id", args.id}, {"type", kTypes.at(args.type)}};
    if (args.type != "local") {
        if (args.channel.empty()) throw UsageError("--channel is required for " + args.type);
        query["channel"] = args.channel;
    }
    if (args.type == "endorsers") {
        if (args.chaincodes.empty()) throw UsageError("--chaincode is required for endorsers");
        query["payload"] = {{"chaincodes", args.chaincodes}};
    }
    const json response = send_query(args.server, query);
    emit(response);
    return response.value("ok", false) ? 0 : 1;
}

struct SelectArgs {
    std::string descriptor;
    std::string server;
    std::string channel;
    std::string chaincode;
    std::size_t retries = 0;
    std::string strategy = "random";
    std::string layout = "first";
    std::uint64_t seed = 0;
    std::string deny;
};

EndorsementDescriptor descriptor_from_file(const std::string& path) {
    const json j = read_json(path);
    // Accept a bare descriptor or a whole endorsement response envelope.
    if (j.contains("result") && j["result"].contains("descriptors") && !j["result"]["descriptors"].empty())
        return descriptor_from_json(j["result"]["descriptors"][0]);
    if (j.contains("descriptors") && j["descriptors"].is_array() && !j["descriptors"].empty())
        return descriptor_from_json(j["descriptors"][0]);
    return descriptor_from_json(j);
}

int run_select(const SelectArgs& args) {
    SelectionStrategy strategy;
    try {
        strategy.peers = peer_choice_from_string(args.strategy);
        strategy.layout = layout_choice_from_string(args.layout);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    if (!args.deny.empty()) {
        const json deny = read_json(args.deny);
        if (!deny.is_array()) throw Error(Errc::schema_error, "deny list must be a JSON array of peer ids");
        for (const auto& id : deny) {
            if (!id.is_string()) throw Error(Errc::schema_error, "deny list entries must be strings");
            strategy.deny.insert(id.get<std::string>());
        }
        if (strategy.peers == PeerChoice::random) strategy.peers = PeerChoice::exclude_then_random;
    }
    if (!args.descriptor.empty()) {
        emit(to_json(select_endorsers(descriptor_from_file(args.descriptor), strategy, args.seed)));
        return 0;
    }
    if (args.server.empty() || args.channel.empty() || args.chaincode.empty())
        throw UsageError("select needs --descriptor, or --server with --channel and --chaincode");

    // Live mode: fetch a fresh descriptor for every attempt, so peers that
    // dropped out since the last query are no longer offered.
    const ChannelContext ctx{args.channel, {}, args.server};
    for (std::size_t attempt = 1;; ++attempt) {
        try {
            json out = to_json(select_endorsers(discover_endorsers(ctx, args.chaincode), strategy, args.seed));
            out["attempts"] = attempt;
            emit(out);
            return 0;
        } catch (const Error& e) {
            const bool retryable = e.code() == Errc::insufficient_peers || e.code() == Errc::no_satisfiable_layout;
            if (!retryable || attempt > args.retries) throw;
        }
    }
}

struct LayoutsArgs {
    std::string policy;
    bool no_prune = false;
    std::optional<std::size_t> cap;
};

int run_layouts(const LayoutsArgs& args) {
    LayoutOptions options;
    options.cap = args.cap ? *args.cap : layout_cap_from_env(kDefaultLayoutCap);
    if (options.cap < 1) throw UsageError("--cap must be positive");
    options.prune_dominated = !args.no_prune;
    const SignaturePolicy policy = parse_policy(args.policy);
    const LayoutSet set = compute_layouts(policy, options);
    json layouts = json::array();
    for (const auto& l : set.layouts) layouts.push_back(to_json(l));
    emit({{"policy", to_dsl(policy)},
          {"policy_json", to_json(policy)},
          {"source_policy_digest", crypto::to_hex(set.source_policy_digest)},
          {"layouts", std::move(layouts)}});
    return 0;
}

struct SimulateArgs {
    std::string scenario;
    std::string transcript;
};

int run_simulate(const SimulateArgs& args) {
    const ScenarioScript script = load_scenario(args.scenario);
    const ScenarioResult result = run_scenario(script);
    json summary = {{"passed", result.passed}, {"steps", result.transcript.size()}};
    if (!result.passed)
        summary["failure"] = {{"code", to_string(*result.failure_code)}, {"message", result.failure_message}};
    if (!args.transcript.empty()) {
        std::ofstream out(args.transcript, std::ios::binary);
        if (!out) throw UsageError("cannot write " + args.transcript);
        out << result.transcript_text();
        summary["transcript"] = args.transcript;
    } else {
        json lines = json::array();
        for (const auto& l : result.transcript) lines.push_back(json::parse(l));
        summary["transcript"] = std::move(lines);
    }
    emit(summary);
    return result.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Service discovery for a simulated permissioned blockchain network"};
    app.require_subcommand(1);

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Serve discovery queries for one peer");
    serve_cmd->add_option("--network", serve.network, "Network file (JSON)")->required();
    serve_cmd->add_option("--peer", serve.peer, "Responding peer id")->required();
    serve_cmd->add_option("--listen", serve.listen, "Listen address host:port")->required();
    serve_cmd->add_flag("--strict-channel", serve.strict_channel,
                        "Only answer for channels the peer has joined");
    serve_cmd->add_flag("--strict-version", serve.strict_version,
                        "Require installed chaincode versions to match the definition");
    serve_cmd->add_option("--threads", serve.threads, "Worker threads")->check(CLI::PositiveNumber);

    QueryArgs query;
    auto* query_cmd = app.add_subcommand("query", "Send one discovery query");
    query_cmd->add_option("type", query.type, "config | members | endorsers | local")
        ->required()
        ->check(CLI::IsMember({"config", "members", "endorsers", "local"}));
    query_cmd->add_option("--server", query.server, "Server address host:port")->required();
    query_cmd->add_option("--channel", query.channel, "Channel name");
    query_cmd->add_option("--chaincode", query.chaincodes, "Chaincode name (repeatable)");
    query_cmd->add_option("--id", query.id, "Request id");

    SelectArgs select;
    auto* select_cmd = app.add_subcommand("select", "Select endorsers from a descriptor");
    auto* descriptor_opt =
        select_cmd->add_option("--descriptor", select.descriptor, "Descriptor or endorsement response file");
    auto* server_opt = select_cmd->add_option("--server", select.server, "Query this peer for a fresh descriptor");
    descriptor_opt->excludes(server_opt);
    select_cmd->add_option("--channel", select.channel, "Channel, with --server")->needs(server_opt);
    select_cmd->add_option("--chaincode", select.chaincode, "Chaincode, with --server")->needs(server_opt);
    select_cmd->add_option("--retries", select.retries, "Re-query and re-select this many times on failure")
        ->needs(server_opt);
    select_cmd->add_option("--strategy", select.strategy, "random | height | exclude")
        ->check(CLI::IsMember({"random", "height", "exclude"}));
    select_cmd->add_option("--layout", select.layout, "first | fewest | random")
        ->check(CLI::IsMember({"first", "fewest", "random"}));
    select_cmd->add_option("--seed", select.seed, "64-bit seed")->required();
    select_cmd->add_option("--deny", select.deny, "JSON array of peer ids to avoid");

    LayoutsArgs layouts;
    auto* layouts_cmd = app.add_subcommand("layouts", "Compute the layouts of a policy");
    layouts_cmd->add_option("--policy", layouts.policy, "Policy DSL text")->required();
    layouts_cmd->add_flag("--no-prune", layouts.no_prune, "Keep dominated layouts");
    layouts_cmd->add_option("--cap", layouts.cap, "Working-set cap");

    SimulateArgs simulate;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run a scenario script");
    simulate_cmd->add_option("--scenario", simulate.scenario, "Scenario file")->required();
    simulate_cmd->add_option("--transcript", simulate.transcript, "Write the JSON-lines transcript here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*serve_cmd) return run_serve(serve);
        if (*query_cmd) return run_query(query);
        if (*select_cmd) return run_select(select);
        if (*layouts_cmd) return run_layouts(layouts);
        if (*simulate_cmd) return run_simulate(simulate);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        return emit_error(e);
    }
    return 2;
}
