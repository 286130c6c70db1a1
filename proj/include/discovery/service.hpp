#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "discovery/error.hpp"
#include "discovery/layout.hpp"
#include "discovery/membership.hpp"

namespace discovery {

struct MspCerts {
    Bytes ca_cert;
    Bytes tls_ca_cert;

    bool operator==(const MspCerts&) const = default;
};

struct ConfigResult {
    std::map<std::string, MspCerts> msps;
    std::vector<std::string> orderers;

    bool operator==(const ConfigResult&) const = default;
};

struct PeerInfo {
    std::string peer_id;
    std::string msp_id;
    std::string endpoint;
    std::uint64_t ledger_height = 0;
    std::set<std::string> chaincodes;

    bool operator==(const PeerInfo&) const = default;
};

struct EndorsementDescriptor {
    std::string chaincode;
    std::map<std::string, std::vector<PeerInfo>> endorsers_by_groups;
    std::vector<Layout> layouts;
    std::uint64_t view_seq = 0;

    bool operator==(const EndorsementDescriptor&) const = default;
};

/// Bipartite graph between a policy's distinct principals and the eligible
/// peers of a channel; (u, v) is an edge when peer v's identity satisfies
/// principal u.
struct SatisfactionGraph {
    std::vector<Principal> principals;
    std::vector<PeerInfo> peers;
    std::set<std::pair<std::size_t, std::size_t>> edges;
};

struct ServiceOptions {
    std::size_t layout_cap = kDefaultLayoutCap;
    /// Require the installed chaincode version to equal the defined one.
    bool strict_version = false;
    /// Only answer channel queries for channels the responder has joined.
    bool strict_channel = false;
};

ConfigResult config_query(const ChannelView& view);

/// Alive channel peers sorted by peer id.
std::vector<PeerInfo> peer_membership_query(const ChannelView& view);

/// Alive peers of the whole network, channel-scoped fields left empty.
/// Throws Error(responder_unavailable) when the responder is unknown or offline.
std::vector<PeerInfo> local_membership_query(const NetworkState& state, const std::string& responder);

/// Throws Error(unknown_chaincode) when the chaincode is not defined on the channel.
SatisfactionGraph build_satisfaction_graph(const SignaturePolicy& policy, const ChannelView& view,
                                           const std::string& chaincode, bool strict_version = false);

/// One descriptor per requested chaincode, in request order. Layouts that the
/// live peers cannot fill (counting each peer once) are dropped; if none
/// remain the query fails with Error(no_satisfiable_layout).
std::vector<EndorsementDescriptor> endorsement_query(const ChannelView& view,
                                                     const std::vector<std::string>& chaincodes,
                                                     const ServiceOptions& options = {});

/// Dispatches one query envelope and always returns a response envelope;
/// failures become {"ok": false, "error": {"code", "message"}}.
nlohmann::json handle_query(const NetworkState& state, const std::string& responder,
                            const nlohmann::json& query, const ServiceOptions& options = {});

nlohmann::json make_error_response(const nlohmann::json& id, std::uint64_t view_seq, Errc code,
                                   const std::string& message);

nlohmann::json to_json(const ConfigResult& config);
ConfigResult config_from_json(const nlohmann::json& j);

/// Full form for peer-membership answers; local form drops channel-scoped fields.
nlohmann::json peer_to_json(const PeerInfo& peer);
nlohmann::json local_peer_to_json(const PeerInfo& peer);
PeerInfo peer_info_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EndorsementDescriptor& descriptor);
EndorsementDescriptor descriptor_from_json(const nlohmann::json& j);

}  // namespace discovery
