#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "discovery/policy.hpp"

namespace discovery {

struct OrgConfig {
    std::string msp_id;
    Bytes ca_cert;
    Bytes tls_ca_cert;

    bool operator==(const OrgConfig&) const = default;
};

struct ChaincodeDefinition {
    std::string name;
    std::string version;
    std::string policy_text;  // DSL as configured
    SignaturePolicy endorsement_policy;

    bool operator==(const ChaincodeDefinition&) const = default;
};

struct ChannelConfig {
    std::string name;
    std::vector<OrgConfig> orgs;
    std::vector<std::string> orderer_endpoints;
    std::map<std::string, ChaincodeDefinition> chaincodes;

    bool operator==(const ChannelConfig&) const = default;
};

struct InstalledChaincode {
    std::string name;
    std::string version;

    auto operator<=>(const InstalledChaincode&) const = default;
};

struct PeerRecord {
    std::string peer_id;
    Identity identity;
    std::string endpoint;
    std::set<std::string> channels;
    std::map<std::string, std::set<InstalledChaincode>> installed;
    std::map<std::string, std::uint64_t> ledger_heights;
    bool alive = true;

    /// Name-only match unless `version` is given.
    bool has_chaincode(const std::string& channel, const std::string& name,
                       const std::optional<std::string>& version = std::nullopt) const;
    std::uint64_t height_on(const std::string& channel) const;

    bool operator==(const PeerRecord&) const = default;
};

struct NetworkState {
    std::map<std::string, ChannelConfig> channels;
    std::map<std::string, PeerRecord> peers;
    std::uint64_t event_seq = 0;

    bool operator==(const NetworkState&) const = default;
};

namespace events {

struct PeerJoinedChannel { std::string peer; std::string channel; };
struct PeerLeftChannel { std::string peer; std::string channel; };
struct PeerOnline { std::string peer; };
struct PeerOffline { std::string peer; };
struct ChaincodeInstalled { std::string peer; std::string channel; std::string name; std::string version; };
struct ChaincodeDefined { std::string channel; std::string name; std::string version; std::string policy; };
struct LedgerHeight { std::string peer; std::string channel; std::uint64_t height = 0; };
struct OrgAdded { std::string channel; OrgConfig org; };
struct PeerAdded { PeerRecord peer; };

}  // namespace events

using MembershipEvent =
    std::variant<events::PeerJoinedChannel, events::PeerLeftChannel, events::PeerOnline,
                 events::PeerOffline, events::ChaincodeInstalled, events::ChaincodeDefined,
                 events::LedgerHeight, events::OrgAdded, events::PeerAdded>;

/// Builds the state described by a network file (JSON) with event_seq 0.
/// Throws Error(schema_error), Error(dangling_reference) or Error(policy_error).
NetworkState new_network(const nlohmann::json& network_file);
NetworkState load_network_file(const std::filesystem::path& path);

/// Checks every state invariant; throws on the first violation.
void validate_state(const NetworkState& state);

/// Returns the successor state. The input is left untouched.
/// Throws Error(dangling_reference), Error(height_regression),
/// Error(policy_error) or Error(conflict).
NetworkState apply_event(const NetworkState& state, const MembershipEvent& event);

/// Immutable per-channel snapshot: the channel config plus the alive peers
/// that joined it, sorted by peer id.
struct ChannelView {
    ChannelConfig config;
    std::vector<PeerRecord> peers;
    std::uint64_t event_seq = 0;
};

/// Throws Error(unknown_channel).
ChannelView channel_view(const NetworkState& state, const std::string& channel);

/// Single-writer/multi-reader holder. Readers take immutable snapshots that
/// stay valid while later events are applied.
class Network {
public:
    explicit Network(NetworkState initial);

    std::shared_ptr<const NetworkState> snapshot() const;
    /// Applies one event atomically and returns the new event_seq.
    std::uint64_t apply(const MembershipEvent& event);

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const NetworkState> state_;
};

Identity make_peer_identity(const std::string& peer_id, const std::string& msp_id, Role role);

nlohmann::json to_json(const NetworkState& state);
nlohmann::json to_json(const MembershipEvent& event);
/// {"type": "PeerOffline", "args": {...}}; "seq_hint" is accepted and ignored.
MembershipEvent event_from_json(const nlohmann::json& j);
std::string event_type_name(const MembershipEvent& event);

}  // namespace discovery
