#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "discovery/selection.hpp"
#include "discovery/service.hpp"

namespace discovery {

struct ClientConfig {
    std::vector<std::string> bootstrap_endpoints;  // trusted peers, tried in order
    std::string channel;
    std::uint64_t rng_seed = 0;
    SelectionStrategy strategy;
};

struct ChannelContext {
    std::string channel;
    ConfigResult config;
    std::string source_endpoint;
};

/// Issues a config query to each bootstrap endpoint in turn; the first
/// successful answer wins. Throws Error(all_bootstrap_peers_unreachable)
/// listing every endpoint's failure.
ChannelContext bootstrap(const ClientConfig& config);

/// Sends one query and returns the response envelope. Error envelopes are
/// returned as-is; only transport failures throw.
nlohmann::json send_query(const std::string& endpoint, const nlohmann::json& query);

/// Asks the context's source peer for a fresh descriptor. Service error
/// responses are rethrown as Error with the service's code and message.
EndorsementDescriptor discover_endorsers(const ChannelContext& ctx, const std::string& chaincode);

std::vector<PeerInfo> discover_peers(const ChannelContext& ctx);

}  // namespace discovery
