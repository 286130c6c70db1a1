#include "discovery/client.hpp"

#include <atomic>

#include "discovery/wire.hpp"

namespace discovery {

using nlohmann::json;

namespace {

std::string next_request_id() {
    static std::atomic<std::uint64_t> counter{0};
    return "sdk-" + std::to_string(++counter);
}

const json& unwrap(const json& response) {
    if (!response.is_object() || !response.contains("ok") || !response["ok"].is_boolean())
        throw Error(Errc::transport_error, "malformed response envelope");
    if (!response["ok"].get<bool>()) {
        const json& err = response.contains("error") ? response["error"] : json::object();
        const std::string code = err.value("code", std::string("transport_error"));
        throw Error(errc_from_string(code), err.value("message", code));
    }
    if (!response.contains("result")) throw Error(Errc::transport_error, "response has no result");
    return response["result"];
}

}  // namespace

json send_query(const std::string& endpoint, const json& query) {
    wire::Connection conn(endpoint);
    return conn.request(query);
}

ChannelContext bootstrap(const ClientConfig& config) {
    if (config.bootstrap_endpoints.empty())
        throw Error(Errc::all_bootstrap_peers_unreachable, "no bootstrap endpoints configured");
    std::string failures;
    for (const auto& endpoint : config.bootstrap_endpoints) {
        try {
            const json response = send_query(
                endpoint, {{"id", next_request_id()}, {"type", "config"}, {"channel", config.channel}});
            return ChannelContext{config.channel, config_from_json(unwrap(response)), endpoint};
        } catch (const Error& e) {
            if (!failures.empty()) failures += "; ";
            failures += endpoint + ": " + std::string(to_string(e.code())) + ": " + e.what();
        }
    }
    throw Error(Errc::all_bootstrap_peers_unreachable, "all bootstrap peers failed: " + failures);
}

EndorsementDescriptor discover_endorsers(const ChannelContext& ctx, const std::string& chaincode) {
    const json response = send_query(ctx.source_endpoint, {{"id", next_request_id()},
                                                           {"type", "endorsement"},
                                                           {"channel", ctx.channel},
                                                           {"payload", {{"chaincodes", {chaincode}}}}});
    const json& result = unwrap(response);
    if (!result.contains("descriptors") || !result["descriptors"].is_array() ||
        result["descriptors"].size() != 1)
        throw Error(Errc::transport_error, "endorsement response must hold one descriptor");
    return descriptor_from_json(result["descriptors"][0]);
}

std::vector<PeerInfo> discover_peers(const ChannelContext& ctx) {
    const json response = send_query(
        ctx.source_endpoint,
        {{"id", next_request_id()}, {"type", "peer_membership"}, {"channel", ctx.channel}});
    const json& result = unwrap(response);
    std::vector<PeerInfo> peers;
    for (const auto& p : result.at("peers")) peers.push_back(peer_info_from_json(p));
    return peers;
}

}  // namespace discovery
