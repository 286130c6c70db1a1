#include "discovery/membership.hpp"
#include "discovery/json_util.hpp"

#include <algorithm>
#include <fstream>

#include "discovery/crypto.hpp"
#include "discovery/error.hpp"

namespace discovery {

using nlohmann::json;

bool PeerRecord::has_chaincode(const std::string& channel, const std::string& name,
                               const std::optional<std::string>& version) const {
    const auto it = installed.find(channel);
    if (it == installed.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(), [&](const InstalledChaincode& cc) {
        return cc.name == name && (!version || cc.version == *version);
    });
}

std::uint64_t PeerRecord::height_on(const std::string& channel) const {
    const auto it = ledger_heights.find(channel);
    return it == ledger_heights.end() ? 0 : it->second;
}

Identity make_peer_identity(const std::string& peer_id, const std::string& msp_id, Role role) {
    return Identity{peer_id, msp_id, role, crypto::derive_secret(peer_id)};
}

namespace {

// ---------------------------------------------------------------------------
// Schema helpers

[[noreturn]] void schema_fail(const std::string& what) { throw Error(Errc::schema_error, what); }

const json& field(const json& j, const char* key, const std::string& ctx) {
    if (!j.is_object() || !j.contains(key)) schema_fail(ctx + ": missing '" + key + "'");
    return j[key];
}

std::string str_field(const json& j, const char* key, const std::string& ctx) {
    const json& v = field(j, key, ctx);
    if (!v.is_string()) schema_fail(ctx + ": '" + key + "' must be a string");
    return v.get<std::string>();
}

std::uint64_t uint_field(const json& j, const char* key, const std::string& ctx) {
    const json& v = field(j, key, ctx);
    if (!is_non_negative_integer(v)) schema_fail(ctx + ": '" + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

const json& array_field(const json& j, const char* key, const std::string& ctx) {
    const json& v = field(j, key, ctx);
    if (!v.is_array()) schema_fail(ctx + ": '" + key + "' must be an array");
    return v;
}

std::vector<std::string> string_array(const json& arr, const std::string& ctx) {
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (!v.is_string()) schema_fail(ctx + ": expected an array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

SignaturePolicy parse_embedded_policy(const std::string& text, const std::string& ctx) {
    try {
        return parse_policy(text);
    } catch (const Error& e) {
        throw Error(Errc::policy_error, ctx + ": " + e.what());
    }
}

InstalledChaincode parse_installed(const std::string& text, const std::string& ctx) {
    const auto at = text.rfind('@');
    if (at == std::string::npos || at == 0 || at + 1 == text.size())
        schema_fail(ctx + ": installed chaincode must be 'name@version', got '" + text + "'");
    return {text.substr(0, at), text.substr(at + 1)};
}

OrgConfig org_from_json(const json& j, const std::string& ctx) {
    OrgConfig org;
    org.msp_id = str_field(j, "msp", ctx);
    if (!is_valid_msp_id(org.msp_id)) schema_fail(ctx + ": invalid msp id '" + org.msp_id + "'");
    org.ca_cert = crypto::base64_decode(str_field(j, "ca_cert", ctx));
    org.tls_ca_cert = crypto::base64_decode(str_field(j, "tls_ca_cert", ctx));
    if (org.ca_cert.empty() || org.tls_ca_cert.empty())
        schema_fail(ctx + ": certificate blobs must be non-empty");
    return org;
}

json org_to_json(const OrgConfig& org) {
    return {{"msp", org.msp_id},
            {"ca_cert", crypto::base64_encode(org.ca_cert)},
            {"tls_ca_cert", crypto::base64_encode(org.tls_ca_cert)}};
}

ChaincodeDefinition define_chaincode(std::string name, std::string version, std::string policy,
                                     const std::string& ctx) {
    if (name.empty()) schema_fail(ctx + ": chaincode name must be non-empty");
    ChaincodeDefinition def;
    def.endorsement_policy = parse_embedded_policy(policy, ctx);
    def.name = std::move(name);
    def.version = std::move(version);
    def.policy_text = std::move(policy);
    return def;
}

// Peer object in network-file form; channel references are checked later.
PeerRecord peer_from_json(const json& j, const std::string& ctx_in) {
    PeerRecord peer;
    peer.peer_id = str_field(j, "id", ctx_in);
    const std::string ctx = "peer '" + peer.peer_id + "'";
    if (peer.peer_id.empty()) schema_fail(ctx_in + ": peer id must be non-empty");
    const std::string msp = str_field(j, "msp", ctx);
    if (!is_valid_msp_id(msp)) schema_fail(ctx + ": invalid msp id '" + msp + "'");
    Role role = Role::peer;
    if (j.contains("role")) {
        try {
            role = role_from_string(str_field(j, "role", ctx));
        } catch (const Error& e) {
            schema_fail(ctx + ": " + e.what());
        }
    }
    peer.identity = make_peer_identity(peer.peer_id, msp, role);
    peer.endpoint = str_field(j, "endpoint", ctx);
    if (j.contains("channels"))
        for (auto& ch : string_array(array_field(j, "channels", ctx), ctx))
            peer.channels.insert(std::move(ch));
    if (j.contains("installed")) {
        const json& inst = j["installed"];
        if (!inst.is_object()) schema_fail(ctx + ": 'installed' must be an object");
        for (const auto& [ch, list] : inst.items()) {
            if (!list.is_array()) schema_fail(ctx + ": installed['" + ch + "'] must be an array");
            auto& set = peer.installed[ch];
            for (const auto& s : string_array(list, ctx)) set.insert(parse_installed(s, ctx));
        }
    }
    if (j.contains("heights")) {
        const json& heights = j["heights"];
        if (!heights.is_object()) schema_fail(ctx + ": 'heights' must be an object");
        for (const auto& [ch, h] : heights.items()) {
            if (!is_non_negative_integer(h)) schema_fail(ctx + ": heights must be non-negative integers");
            peer.ledger_heights[ch] = h.get<std::uint64_t>();
        }
    }
    if (j.contains("alive")) {
        if (!j["alive"].is_boolean()) schema_fail(ctx + ": 'alive' must be a boolean");
        peer.alive = j["alive"].get<bool>();
    }
    return peer;
}

json peer_to_json(const PeerRecord& peer) {
    json installed = json::object();
    for (const auto& [ch, set] : peer.installed) {
        json list = json::array();
        for (const auto& cc : set) list.push_back(cc.name + "@" + cc.version);
        installed[ch] = std::move(list);
    }
    json heights = json::object();
    for (const auto& [ch, h] : peer.ledger_heights) heights[ch] = h;
    return {{"id", peer.peer_id},
            {"msp", peer.identity.msp_id},
            {"role", to_string(peer.identity.role)},
            {"endpoint", peer.endpoint},
            {"channels", peer.channels},
            {"installed", std::move(installed)},
            {"heights", std::move(heights)},
            {"alive", peer.alive}};
}

void check_peer_refs(const NetworkState& state, const PeerRecord& peer) {
    for (const auto& ch : peer.channels)
        if (!state.channels.count(ch))
            throw Error(Errc::dangling_reference,
                        "peer '" + peer.peer_id + "' references undefined channel '" + ch + "'");
    for (const auto& [ch, set] : peer.installed)
        if (!peer.channels.count(ch))
            throw Error(Errc::dangling_reference, "peer '" + peer.peer_id +
                                                      "' has chaincodes installed on unjoined channel '" +
                                                      ch + "'");
    for (const auto& [ch, h] : peer.ledger_heights)
        if (!peer.channels.count(ch))
            throw Error(Errc::dangling_reference, "peer '" + peer.peer_id +
                                                      "' has a ledger height on unjoined channel '" +
                                                      ch + "'");
}

PeerRecord& require_peer(NetworkState& state, const std::string& id) {
    const auto it = state.peers.find(id);
    if (it == state.peers.end())
        throw Error(Errc::dangling_reference, "unknown peer '" + id + "'");
    return it->second;
}

ChannelConfig& require_channel(NetworkState& state, const std::string& name) {
    const auto it = state.channels.find(name);
    if (it == state.channels.end())
        throw Error(Errc::dangling_reference, "unknown channel '" + name + "'");
    return it->second;
}

void require_joined(const PeerRecord& peer, const std::string& channel) {
    if (!peer.channels.count(channel))
        throw Error(Errc::dangling_reference,
                    "peer '" + peer.peer_id + "' has not joined channel '" + channel + "'");
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

// ---------------------------------------------------------------------------

NetworkState new_network(const json& file) {
    if (!file.is_object()) schema_fail("network file must be a JSON object");
    NetworkState state;
    if (file.contains("channels")) {
        for (const auto& cj : array_field(file, "channels", "network")) {
            ChannelConfig ch;
            ch.name = str_field(cj, "name", "channel");
            const std::string ctx = "channel '" + ch.name + "'";
            if (ch.name.empty()) schema_fail("channel name must be non-empty");
            if (cj.contains("orgs"))
                for (const auto& oj : array_field(cj, "orgs", ctx)) {
                    OrgConfig org = org_from_json(oj, ctx);
                    for (const auto& existing : ch.orgs)
                        if (existing.msp_id == org.msp_id)
                            schema_fail(ctx + ": duplicate org '" + org.msp_id + "'");
                    ch.orgs.push_back(std::move(org));
                }
            ch.orderer_endpoints = string_array(array_field(cj, "orderers", ctx), ctx);
            if (ch.orderer_endpoints.empty()) schema_fail(ctx + ": 'orderers' must be non-empty");
            if (cj.contains("chaincodes"))
                for (const auto& ccj : array_field(cj, "chaincodes", ctx)) {
                    const std::string name = str_field(ccj, "name", ctx);
                    const std::string cc_ctx = ctx + " chaincode '" + name + "'";
                    auto def = define_chaincode(name, str_field(ccj, "version", cc_ctx),
                                                str_field(ccj, "policy", cc_ctx), cc_ctx);
                    if (!ch.chaincodes.emplace(def.name, def).second)
                        schema_fail(cc_ctx + ": duplicate chaincode");
                }
            if (!state.channels.emplace(ch.name, ch).second)
                schema_fail("duplicate channel '" + ch.name + "'");
        }
    }
    if (file.contains("peers")) {
        for (const auto& pj : array_field(file, "peers", "network")) {
            PeerRecord peer = peer_from_json(pj, "peer");
            check_peer_refs(state, peer);
            if (!state.peers.emplace(peer.peer_id, peer).second)
                schema_fail("duplicate peer '" + peer.peer_id + "'");
        }
    }
    validate_state(state);
    return state;
}

NetworkState load_network_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::schema_error, "cannot open network file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(Errc::schema_error, "network file is not valid JSON: " + std::string(e.what()));
    }
    return new_network(j);
}

void validate_state(const NetworkState& state) {
    for (const auto& [name, ch] : state.channels) {
        if (name != ch.name) throw Error(Errc::schema_error, "channel key mismatch");
        if (ch.orderer_endpoints.empty())
            throw Error(Errc::schema_error, "channel '" + name + "' has no orderers");
        for (const auto& [cc, def] : ch.chaincodes) validate_policy(def.endorsement_policy);
    }
    for (const auto& [id, peer] : state.peers) {
        if (id != peer.peer_id) throw Error(Errc::schema_error, "peer key mismatch");
        check_peer_refs(state, peer);
    }
}

NetworkState apply_event(const NetworkState& current, const MembershipEvent& event) {
    NetworkState next = current;
    std::visit(
        overloaded{
            [&](const events::PeerJoinedChannel& e) {
                auto& peer = require_peer(next, e.peer);
                require_channel(next, e.channel);
                peer.channels.insert(e.channel);
            },
            [&](const events::PeerLeftChannel& e) {
                auto& peer = require_peer(next, e.peer);
                require_joined(peer, e.channel);
                peer.channels.erase(e.channel);
                peer.installed.erase(e.channel);
                peer.ledger_heights.erase(e.channel);
            },
            [&](const events::PeerOnline& e) { require_peer(next, e.peer).alive = true; },
            [&](const events::PeerOffline& e) { require_peer(next, e.peer).alive = false; },
            [&](const events::ChaincodeInstalled& e) {
                auto& peer = require_peer(next, e.peer);
                require_joined(peer, e.channel);
                if (e.name.empty()) throw Error(Errc::schema_error, "chaincode name must be non-empty");
                peer.installed[e.channel].insert({e.name, e.version});
            },
            [&](const events::ChaincodeDefined& e) {
                auto& ch = require_channel(next, e.channel);
                ch.chaincodes[e.name] = define_chaincode(e.name, e.version, e.policy,
                                                         "chaincode '" + e.name + "'");
            },
            [&](const events::LedgerHeight& e) {
                auto& peer = require_peer(next, e.peer);
                require_joined(peer, e.channel);
                const auto current_height = peer.height_on(e.channel);
                if (e.height < current_height)
                    throw Error(Errc::height_regression,
                                "ledger height of '" + e.peer + "' on '" + e.channel +
                                    "' would regress from " + std::to_string(current_height) +
                                    " to " + std::to_string(e.height));
                peer.ledger_heights[e.channel] = e.height;
            },
            [&](const events::OrgAdded& e) {
                auto& ch = require_channel(next, e.channel);
                for (const auto& org : ch.orgs)
                    if (org.msp_id == e.org.msp_id)
                        throw Error(Errc::conflict, "org '" + e.org.msp_id +
                                                        "' already on channel '" + e.channel + "'");
                ch.orgs.push_back(e.org);
            },
            [&](const events::PeerAdded& e) {
                if (next.peers.count(e.peer.peer_id))
                    throw Error(Errc::conflict, "peer '" + e.peer.peer_id + "' already exists");
                check_peer_refs(next, e.peer);
                next.peers.emplace(e.peer.peer_id, e.peer);
            },
        },
        event);
    ++next.event_seq;
    return next;
}

ChannelView channel_view(const NetworkState& state, const std::string& channel) {
    const auto it = state.channels.find(channel);
    if (it == state.channels.end())
        throw Error(Errc::unknown_channel, "unknown channel '" + channel + "'");
    ChannelView view;
    view.config = it->second;
    view.event_seq = state.event_seq;
    for (const auto& [id, peer] : state.peers)
        if (peer.alive && peer.channels.count(channel)) view.peers.push_back(peer);
    return view;
}

Network::Network(NetworkState initial)
    : state_(std::make_shared<const NetworkState>(std::move(initial))) {}

std::shared_ptr<const NetworkState> Network::snapshot() const {
    std::lock_guard lock(mutex_);
    return state_;
}

std::uint64_t Network::apply(const MembershipEvent& event) {
    std::lock_guard lock(mutex_);
    auto next = std::make_shared<const NetworkState>(apply_event(*state_, event));
    state_ = std::move(next);
    return state_->event_seq;
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const NetworkState& state) {
    json channels = json::array();
    for (const auto& [name, ch] : state.channels) {
        json orgs = json::array();
        for (const auto& org : ch.orgs) orgs.push_back(org_to_json(org));
        json chaincodes = json::array();
        for (const auto& [cc, def] : ch.chaincodes)
            chaincodes.push_back(
                {{"name", def.name}, {"version", def.version}, {"policy", def.policy_text}});
        channels.push_back({{"name", ch.name},
                            {"orgs", std::move(orgs)},
                            {"orderers", ch.orderer_endpoints},
                            {"chaincodes", std::move(chaincodes)}});
    }
    json peers = json::array();
    for (const auto& [id, peer] : state.peers) peers.push_back(peer_to_json(peer));
    return {{"channels", std::move(channels)},
            {"peers", std::move(peers)},
            {"event_seq", state.event_seq}};
}

std::string event_type_name(const MembershipEvent& event) {
    return std::visit(
        overloaded{
            [](const events::PeerJoinedChannel&) { return "PeerJoinedChannel"; },
            [](const events::PeerLeftChannel&) { return "PeerLeftChannel"; },
            [](const events::PeerOnline&) { return "PeerOnline"; },
            [](const events::PeerOffline&) { return "PeerOffline"; },
            [](const events::ChaincodeInstalled&) { return "ChaincodeInstalled"; },
            [](const events::ChaincodeDefined&) { return "ChaincodeDefined"; },
            [](const events::LedgerHeight&) { return "LedgerHeight"; },
            [](const events::OrgAdded&) { return "OrgAdded"; },
            [](const events::PeerAdded&) { return "PeerAdded"; },
        },
        event);
}

json to_json(const MembershipEvent& event) {
    json args = std::visit(
        overloaded{
            [](const events::PeerJoinedChannel& e) -> json {
                return {{"peer", e.peer}, {"channel", e.channel}};
            },
            [](const events::PeerLeftChannel& e) -> json {
                return {{"peer", e.peer}, {"channel", e.channel}};
            },
            [](const events::PeerOnline& e) -> json { return {{"peer", e.peer}}; },
            [](const events::PeerOffline& e) -> json { return {{"peer", e.peer}}; },
            [](const events::ChaincodeInstalled& e) -> json {
                return {{"peer", e.peer}, {"channel", e.channel}, {"name", e.name}, {"version", e.version}};
            },
            [](const events::ChaincodeDefined& e) -> json {
                return {{"channel", e.channel}, {"name", e.name}, {"version", e.version}, {"policy", e.policy}};
            },
            [](const events::LedgerHeight& e) -> json {
                return {{"peer", e.peer}, {"channel", e.channel}, {"height", e.height}};
            },
            [](const events::OrgAdded& e) -> json {
                return {{"channel", e.channel}, {"org", org_to_json(e.org)}};
            },
            [](const events::PeerAdded& e) -> json { return {{"peer", peer_to_json(e.peer)}}; },
        },
        event);
    return {{"type", event_type_name(event)}, {"args", std::move(args)}};
}

MembershipEvent event_from_json(const json& j) {
    const std::string type = str_field(j, "type", "event");
    const json& args = field(j, "args", "event " + type);
    const std::string ctx = "event " + type;
    if (type == "PeerJoinedChannel")
        return events::PeerJoinedChannel{str_field(args, "peer", ctx), str_field(args, "channel", ctx)};
    if (type == "PeerLeftChannel")
        return events::PeerLeftChannel{str_field(args, "peer", ctx), str_field(args, "channel", ctx)};
    if (type == "PeerOnline") return events::PeerOnline{str_field(args, "peer", ctx)};
    if (type == "PeerOffline") return events::PeerOffline{str_field(args, "peer", ctx)};
    if (type == "ChaincodeInstalled")
        return events::ChaincodeInstalled{str_field(args, "peer", ctx), str_field(args, "channel", ctx),
                                          str_field(args, "name", ctx), str_field(args, "version", ctx)};
    if (type == "ChaincodeDefined")
        return events::ChaincodeDefined{str_field(args, "channel", ctx), str_field(args, "name", ctx),
                                        str_field(args, "version", ctx), str_field(args, "policy", ctx)};
    if (type == "LedgerHeight")
        return events::LedgerHeight{str_field(args, "peer", ctx), str_field(args, "channel", ctx),
                                    uint_field(args, "height", ctx)};
    if (type == "OrgAdded")
        return events::OrgAdded{str_field(args, "channel", ctx), org_from_json(field(args, "org", ctx), ctx)};
    if (type == "PeerAdded") return events::PeerAdded{peer_from_json(field(args, "peer", ctx), ctx)};
    schema_fail("unknown event type '" + type + "'");
}

}  // namespace discovery
