#include "discovery/service.hpp"
#include "discovery/json_util.hpp"

#include <algorithm>

#include "discovery/crypto.hpp"
#include "discovery/matching.hpp"

namespace discovery {

using nlohmann::json;

namespace {

PeerInfo peer_info(const PeerRecord& peer, const std::string& channel) {
    PeerInfo info;
    info.peer_id = peer.peer_id;
    info.msp_id = peer.identity.msp_id;
    info.endpoint = peer.endpoint;
    info.ledger_height = peer.height_on(channel);
    if (const auto it = peer.installed.find(channel); it != peer.installed.end())
        for (const auto& cc : it->second) info.chaincodes.insert(cc.name);
    return info;
}

const ChaincodeDefinition& require_chaincode(const ChannelView& view, const std::string& name) {
    const auto it = view.config.chaincodes.find(name);
    if (it == view.config.chaincodes.end())
        throw Error(Errc::unknown_chaincode,
                    "chaincode '" + name + "' is not defined on channel '" + view.config.name + "'");
    return it->second;
}

std::vector<GroupDemand> demands_for(const Layout& layout,
                                     const std::map<std::string, std::vector<PeerInfo>>& groups) {
    std::vector<GroupDemand> demands;
    for (const auto& [group, quantity] : layout.quantities) {
        GroupDemand d{group, quantity, {}};
        if (const auto it = groups.find(group); it != groups.end())
            for (const auto& p : it->second) d.candidates.push_back(p.peer_id);
        demands.push_back(std::move(d));
    }
    return demands;
}

EndorsementDescriptor describe(const ChannelView& view, const std::string& chaincode,
                               const ServiceOptions& options) {
    const ChaincodeDefinition& def = require_chaincode(view, chaincode);
    const LayoutSet layouts =
        compute_layouts(def.endorsement_policy, LayoutOptions{options.layout_cap, true});
    const SatisfactionGraph graph =
        build_satisfaction_graph(def.endorsement_policy, view, chaincode, options.strict_version);

    std::map<std::string, std::vector<PeerInfo>> groups;
    for (const auto& principal : graph.principals) groups[group_id(principal)];
    for (const auto& [u, v] : graph.edges)
        groups[group_id(graph.principals[u])].push_back(graph.peers[v]);
    for (auto& [g, peers] : groups)
        std::sort(peers.begin(), peers.end(),
                  [](const PeerInfo& a, const PeerInfo& b) { return a.peer_id < b.peer_id; });

    EndorsementDescriptor out;
    out.chaincode = chaincode;
    out.view_seq = view.event_seq;
    std::string failures;
    for (std::size_t i = 0; i < layouts.layouts.size(); ++i) {
        const Layout& layout = layouts.layouts[i];
        std::optional<std::string> failing;
        for (const auto& [group, quantity] : layout.quantities)
            if (quantity > groups[group].size()) {
                failing = group;
                break;
            }
        if (!failing) failing = first_unfillable(demands_for(layout, groups));
        if (!failing) {
            out.layouts.push_back(layout);
            continue;
        }
        if (!failures.empty()) failures += "; ";
        failures += "layout " + std::to_string(i) + ": group " + *failing + " needs " +
                    std::to_string(layout.quantities.at(*failing)) + ", has " +
                    std::to_string(groups[*failing].size());
    }
    if (out.layouts.empty())
        throw Error(Errc::no_satisfiable_layout,
                    "no satisfiable layout for chaincode '" + chaincode + "': " + failures);
    for (const auto& layout : out.layouts)
        for (const auto& [group, q] : layout.quantities) out.endorsers_by_groups[group] = groups[group];
    return out;
}

json make_ok_response(const json& id, std::uint64_t view_seq, json result) {
    return {{"id", id}, {"ok", true}, {"view_seq", view_seq}, {"result", std::move(result)}};
}

const json& query_field(const json& q, const char* key) {
    if (!q.contains(key)) throw Error(Errc::invalid_query, std::string("query is missing '") + key + "'");
    return q[key];
}

std::string query_string(const json& q, const char* key) {
    const json& v = query_field(q, key);
    if (!v.is_string()) throw Error(Errc::invalid_query, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

json peers_json(const std::vector<PeerInfo>& peers, bool local) {
    json arr = json::array();
    for (const auto& p : peers) arr.push_back(local ? local_peer_to_json(p) : peer_to_json(p));
    return {{"peers", std::move(arr)}};
}

}  // namespace

ConfigResult config_query(const ChannelView& view) {
    ConfigResult out;
    for (const auto& org : view.config.orgs) out.msps[org.msp_id] = {org.ca_cert, org.tls_ca_cert};
    out.orderers = view.config.orderer_endpoints;
    return out;
}

std::vector<PeerInfo> peer_membership_query(const ChannelView& view) {
    std::vector<PeerInfo> out;
    for (const auto& peer : view.peers)
        if (peer.alive && peer.channels.count(view.config.name))
            out.push_back(peer_info(peer, view.config.name));
    std::sort(out.begin(), out.end(),
              [](const PeerInfo& a, const PeerInfo& b) { return a.peer_id < b.peer_id; });
    return out;
}

std::vector<PeerInfo> local_membership_query(const NetworkState& state, const std::string& responder) {
    const auto it = state.peers.find(responder);
    if (it == state.peers.end() || !it->second.alive)
        throw Error(Errc::responder_unavailable, "responder '" + responder + "' is not available");
    std::vector<PeerInfo> out;
    for (const auto& [id, peer] : state.peers)
        if (peer.alive) out.push_back(PeerInfo{id, peer.identity.msp_id, peer.endpoint, 0, {}});
    return out;
}

SatisfactionGraph build_satisfaction_graph(const SignaturePolicy& policy, const ChannelView& view,
                                           const std::string& chaincode, bool strict_version) {
    const ChaincodeDefinition& def = require_chaincode(view, chaincode);
    SatisfactionGraph graph;
    for (const auto& p : policy.principals)
        if (std::find(graph.principals.begin(), graph.principals.end(), p) == graph.principals.end())
            graph.principals.push_back(p);

    std::vector<const PeerRecord*> eligible;
    const std::optional<std::string> version =
        strict_version ? std::optional<std::string>(def.version) : std::nullopt;
    for (const auto& peer : view.peers)
        if (peer.alive && peer.channels.count(view.config.name) &&
            peer.has_chaincode(view.config.name, chaincode, version))
            eligible.push_back(&peer);
    std::sort(eligible.begin(), eligible.end(),
              [](const PeerRecord* a, const PeerRecord* b) { return a->peer_id < b->peer_id; });

    for (std::size_t v = 0; v < eligible.size(); ++v) {
        graph.peers.push_back(peer_info(*eligible[v], view.config.name));
        for (std::size_t u = 0; u < graph.principals.size(); ++u)
            if (satisfies_principal(eligible[v]->identity, graph.principals[u]))
                graph.edges.emplace(u, v);
    }
    return graph;
}

std::vector<EndorsementDescriptor> endorsement_query(const ChannelView& view,
                                                     const std::vector<std::string>& chaincodes,
                                                     const ServiceOptions& options) {
    std::vector<EndorsementDescriptor> out;
    for (const auto& cc : chaincodes) out.push_back(describe(view, cc, options));
    return out;
}

json make_error_response(const json& id, std::uint64_t view_seq, Errc code, const std::string& message) {
    return {{"id", id},
            {"ok", false},
            {"view_seq", view_seq},
            {"error", {{"code", to_string(code)}, {"message", message}}}};
}

json handle_query(const NetworkState& state, const std::string& responder, const json& query,
                  const ServiceOptions& options) {
    const json id = query.is_object() && query.contains("id") ? query["id"] : json("");
    try {
        if (!query.is_object()) throw Error(Errc::invalid_query, "query must be a JSON object");
        const auto it = state.peers.find(responder);
        if (it == state.peers.end() || !it->second.alive)
            throw Error(Errc::responder_unavailable,
                        "responder '" + responder + "' is not available");
        const std::string type = query_string(query, "type");

        if (type == "local_membership")
            return make_ok_response(id, state.event_seq,
                                    peers_json(local_membership_query(state, responder), true));
        if (type != "config" && type != "peer_membership" && type != "endorsement")
            throw Error(Errc::unknown_query_type, "unknown query type '" + type + "'");

        const std::string channel = query_string(query, "channel");
        const ChannelView view = channel_view(state, channel);
        if (options.strict_channel && !it->second.channels.count(channel))
            throw Error(Errc::unknown_channel,
                        "responder '" + responder + "' has not joined channel '" + channel + "'");

        if (type == "config") return make_ok_response(id, view.event_seq, to_json(config_query(view)));
        if (type == "peer_membership")
            return make_ok_response(id, view.event_seq, peers_json(peer_membership_query(view), false));

        const json& payload = query_field(query, "payload");
        if (!payload.is_object() || !payload.contains("chaincodes") || !payload["chaincodes"].is_array() ||
            payload["chaincodes"].empty())
            throw Error(Errc::invalid_query, "endorsement payload needs a non-empty 'chaincodes' array");
        std::vector<std::string> chaincodes;
        for (const auto& cc : payload["chaincodes"]) {
            if (!cc.is_string()) throw Error(Errc::invalid_query, "chaincode names must be strings");
            chaincodes.push_back(cc.get<std::string>());
        }
        json descriptors = json::array();
        for (const auto& d : endorsement_query(view, chaincodes, options))
            descriptors.push_back(to_json(d));
        return make_ok_response(id, view.event_seq, {{"descriptors", std::move(descriptors)}});
    } catch (const Error& e) {
        return make_error_response(id, state.event_seq, e.code(), e.what());
    }
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const ConfigResult& config) {
    json msps = json::object();
    for (const auto& [msp, certs] : config.msps)
        msps[msp] = {{"ca_cert", crypto::base64_encode(certs.ca_cert)},
                     {"tls_ca_cert", crypto::base64_encode(certs.tls_ca_cert)}};
    return {{"msps", std::move(msps)}, {"orderers", config.orderers}};
}

ConfigResult config_from_json(const json& j) {
    if (!j.is_object() || !j.contains("msps") || !j["msps"].is_object() || !j.contains("orderers") ||
        !j["orderers"].is_array())
        throw Error(Errc::schema_error, "config result needs 'msps' and 'orderers'");
    ConfigResult out;
    for (const auto& [msp, certs] : j["msps"].items()) {
        if (!certs.is_object() || !certs.contains("ca_cert") || !certs["ca_cert"].is_string() ||
            !certs.contains("tls_ca_cert") || !certs["tls_ca_cert"].is_string())
            throw Error(Errc::schema_error, "msp entry needs 'ca_cert' and 'tls_ca_cert'");
        out.msps[msp] = {crypto::base64_decode(certs["ca_cert"].get<std::string>()),
                         crypto::base64_decode(certs["tls_ca_cert"].get<std::string>())};
    }
    for (const auto& o : j["orderers"]) {
        if (!o.is_string()) throw Error(Errc::schema_error, "orderer endpoints must be strings");
        out.orderers.push_back(o.get<std::string>());
    }
    return out;
}

json peer_to_json(const PeerInfo& peer) {
    return {{"peer_id", peer.peer_id},
            {"msp", peer.msp_id},
            {"endpoint", peer.endpoint},
            {"ledger_height", peer.ledger_height},
            {"chaincodes", peer.chaincodes}};
}

json local_peer_to_json(const PeerInfo& peer) {
    return {{"peer_id", peer.peer_id}, {"msp", peer.msp_id}, {"endpoint", peer.endpoint}};
}

PeerInfo peer_info_from_json(const json& j) {
    if (!j.is_object() || !j.contains("peer_id") || !j["peer_id"].is_string() || !j.contains("msp") ||
        !j["msp"].is_string() || !j.contains("endpoint") || !j["endpoint"].is_string())
        throw Error(Errc::schema_error, "peer entry needs 'peer_id', 'msp' and 'endpoint'");
    PeerInfo p;
    p.peer_id = j["peer_id"].get<std::string>();
    p.msp_id = j["msp"].get<std::string>();
    p.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("ledger_height")) {
        if (!is_non_negative_integer(j["ledger_height"]))
            throw Error(Errc::schema_error, "ledger_height must be a non-negative integer");
        p.ledger_height = j["ledger_height"].get<std::uint64_t>();
    }
    if (j.contains("chaincodes")) {
        if (!j["chaincodes"].is_array()) throw Error(Errc::schema_error, "chaincodes must be an array");
        for (const auto& cc : j["chaincodes"]) {
            if (!cc.is_string()) throw Error(Errc::schema_error, "chaincode names must be strings");
            p.chaincodes.insert(cc.get<std::string>());
        }
    }
    return p;
}

json to_json(const EndorsementDescriptor& d) {
    json groups = json::object();
    for (const auto& [g, peers] : d.endorsers_by_groups) {
        json arr = json::array();
        for (const auto& p : peers) arr.push_back(peer_to_json(p));
        groups[g] = std::move(arr);
    }
    json layouts = json::array();
    for (const auto& l : d.layouts) layouts.push_back(to_json(l));
    return {{"chaincode", d.chaincode},
            {"view_seq", d.view_seq},
            {"endorsers_by_groups", std::move(groups)},
            {"layouts", std::move(layouts)}};
}

EndorsementDescriptor descriptor_from_json(const json& j) {
    if (!j.is_object() || !j.contains("chaincode") || !j["chaincode"].is_string() ||
        !j.contains("endorsers_by_groups") || !j["endorsers_by_groups"].is_object() ||
        !j.contains("layouts") || !j["layouts"].is_array())
        throw Error(Errc::schema_error,
                    "descriptor needs 'chaincode', 'endorsers_by_groups' and 'layouts'");
    EndorsementDescriptor d;
    d.chaincode = j["chaincode"].get<std::string>();
    if (j.contains("view_seq")) {
        if (!is_non_negative_integer(j["view_seq"]))
            throw Error(Errc::schema_error, "view_seq must be a non-negative integer");
        d.view_seq = j["view_seq"].get<std::uint64_t>();
    }
    for (const auto& [g, peers] : j["endorsers_by_groups"].items()) {
        if (!peers.is_array()) throw Error(Errc::schema_error, "endorser group must be an array");
        auto& list = d.endorsers_by_groups[g];
        for (const auto& p : peers) list.push_back(peer_info_from_json(p));
    }
    for (const auto& l : j["layouts"]) d.layouts.push_back(layout_from_json(l));
    return d;
}

}  // namespace discovery
