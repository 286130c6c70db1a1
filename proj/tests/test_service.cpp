#include "doctest.h"
#include "support.hpp"

#include "discovery/error.hpp"

using namespace discovery;
using namespace testsupport;
using nlohmann::json;

namespace {

NetworkState sample() { return load_network_file(DATA_DIR "/sample_network.json"); }

template <typename F>
Errc error_code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::assertion_failed;
}

std::vector<std::string> peer_ids(const std::vector<PeerInfo>& peers) {
    std::vector<std::string> out;
    for (const auto& p : peers) out.push_back(p.peer_id);
    return out;
}

json peer_json(const std::string& id, const std::string& msp, bool installed = true) {
    json p = {{"id", id}, {"msp", msp}, {"endpoint", id + ":7051"}, {"channels", {"ch1"}}};
    if (installed) p["installed"]["ch1"] = {"cc@v1"};
    return p;
}

NetworkState small_network(const std::string& policy, const std::vector<std::string>& orgs, json peers) {
    json ch = {{"name", "ch1"}, {"orgs", json::array()}, {"orderers", {"o1:7050"}}};
    for (const auto& o : orgs) ch["orgs"].push_back(org_json(o));
    ch["chaincodes"] = {{{"name", "cc"}, {"version", "v1"}, {"policy", policy}}};
    return new_network({{"channels", {ch}}, {"peers", std::move(peers)}});
}

json query(const std::string& type, const std::string& channel = "ch1", json payload = nullptr) {
    json q = {{"id", "7"}, {"type", type}, {"channel", channel}};
    if (!payload.is_null()) q["payload"] = std::move(payload);
    return q;
}

}  // namespace

TEST_CASE("config query echoes the channel configuration") {
    const auto state = sample();
    const auto config = config_query(channel_view(state, "ch1"));
    CHECK(config.msps.size() == 3);
    CHECK(config.msps.count("OrgB"));
    CHECK(config.orderers == std::vector<std::string>{"orderer0.example.com:7050"});
    CHECK(config_from_json(to_json(config)) == config);

    const auto empty = new_network({{"channels", {{{"name", "e"}, {"orderers", {"o1:7050"}}}}}});
    CHECK(config_query(channel_view(empty, "e")).msps.empty());

    const auto grown = apply_event(state, events::OrgAdded{"ch1", {"OrgD", crypto::to_bytes("x"), crypto::to_bytes("y")}});
    CHECK(config_query(channel_view(grown, "ch1")).msps.count("OrgD"));
}

TEST_CASE("peer membership query") {
    auto state = sample();
    const auto all = peer_membership_query(channel_view(state, "ch1"));
    CHECK(peer_ids(all) == std::vector<std::string>{"a1", "a2", "a3", "b1", "b2", "c1", "c2", "c3"});
    CHECK(all[0].ledger_height == 7);
    CHECK(all[0].chaincodes == std::set<std::string>{"SampleCC"});
    state = apply_event(state, events::PeerOffline{"a3"});
    const auto fewer = peer_membership_query(channel_view(state, "ch1"));
    CHECK(fewer.size() == 7);
    CHECK(std::none_of(fewer.begin(), fewer.end(), [](const PeerInfo& p) { return p.peer_id == "a3"; }));

    const auto empty = new_network({{"channels", {{{"name", "e"}, {"orderers", {"o1:7050"}}}}}});
    CHECK(peer_membership_query(channel_view(empty, "e")).empty());
}

TEST_CASE("local membership query") {
    auto state = sample();
    state = apply_event(state, events::PeerOffline{"c2"});
    const auto local = local_membership_query(state, "a1");
    CHECK(local.size() == 7);
    CHECK(local.front().peer_id == "a1");

    const auto single = new_network({{"peers", {{{"id", "solo"}, {"msp", "OrgA"}, {"endpoint", "s:1"}}}}});
    CHECK(peer_ids(local_membership_query(single, "solo")) == std::vector<std::string>{"solo"});

    CHECK(error_code_of([&] { local_membership_query(state, "c2"); }) == Errc::responder_unavailable);
    const auto response = handle_query(state, "c2", {{"id", "1"}, {"type", "local_membership"}});
    CHECK_FALSE(response["ok"].get<bool>());
    CHECK(response["error"]["code"] == "responder_unavailable");
}

TEST_CASE("satisfaction graph") {
    const auto state = sample();
    const auto view = channel_view(state, "ch1");
    const auto& policy = state.channels.at("ch1").chaincodes.at("SampleCC").endorsement_policy;
    const auto graph = build_satisfaction_graph(policy, view, "SampleCC");
    CHECK(graph.principals.size() == 3);
    CHECK(graph.peers.size() == 8);

    // Independent enumeration of every (principal, peer) pair.
    std::set<std::pair<std::size_t, std::size_t>> expected;
    for (std::size_t u = 0; u < graph.principals.size(); ++u)
        for (std::size_t v = 0; v < graph.peers.size(); ++v)
            if (graph.peers[v].msp_id == graph.principals[u].msp_id) expected.insert({u, v});
    CHECK(graph.edges == expected);
    CHECK(graph.edges.size() == 8);

    auto with_d = apply_event(state, events::OrgAdded{"ch1", {"OrgD", {}, {}}});
    json d1 = peer_json("d1", "OrgD");
    d1["installed"]["ch1"] = {"SampleCC@v1"};
    with_d = apply_event(with_d, event_from_json({{"type", "PeerAdded"}, {"args", {{"peer", d1}}}}));
    const auto g2 = build_satisfaction_graph(policy, channel_view(with_d, "ch1"), "SampleCC");
    CHECK(g2.peers.size() == 9);
    CHECK(g2.edges.size() == 8);

    auto uninstalled = apply_event(state, events::PeerLeftChannel{"c2", "ch1"});
    uninstalled = apply_event(uninstalled, events::PeerJoinedChannel{"c2", "ch1"});
    const auto g3 = build_satisfaction_graph(policy, channel_view(uninstalled, "ch1"), "SampleCC");
    CHECK(g3.peers.size() == 7);
    CHECK(std::none_of(g3.peers.begin(), g3.peers.end(), [](const PeerInfo& p) { return p.peer_id == "c2"; }));

    CHECK(error_code_of([&] { build_satisfaction_graph(policy, view, "Nope"); }) == Errc::unknown_chaincode);
}

TEST_CASE("endorsement query on the sample network") {
    auto state = sample();
    const auto descriptors = endorsement_query(channel_view(state, "ch1"), {"SampleCC"});
    REQUIRE(descriptors.size() == 1);
    const auto& d = descriptors[0];
    CHECK(d.chaincode == "SampleCC");
    CHECK(d.view_seq == 0);
    CHECK(d.endorsers_by_groups.size() == 3);
    CHECK(peer_ids(d.endorsers_by_groups.at("OrgA/member")) == std::vector<std::string>{"a1", "a2", "a3"});
    CHECK(peer_ids(d.endorsers_by_groups.at("OrgB/member")) == std::vector<std::string>{"b1", "b2"});
    CHECK(peer_ids(d.endorsers_by_groups.at("OrgC/member")) == std::vector<std::string>{"c1", "c2", "c3"});
    CHECK(d.layouts == std::vector<Layout>{Layout{{{"OrgA/member", 1}, {"OrgB/member", 1}, {"OrgC/member", 1}}}});
    CHECK(descriptor_from_json(to_json(d)) == d);

    state = apply_event(state, events::PeerOffline{"b1"});
    state = apply_event(state, events::PeerOffline{"b2"});
    CHECK(error_code_of([&] { endorsement_query(channel_view(state, "ch1"), {"SampleCC"}); }) ==
          Errc::no_satisfiable_layout);
    CHECK(error_code_of([&] { endorsement_query(channel_view(state, "ch1"), {"Other"}); }) ==
          Errc::unknown_chaincode);
}

TEST_CASE("layouts touching an absent org are dropped") {
    const auto state = small_network("OutOf(2, OrgA.member, OrgB.member, OrgC.member)", {"OrgA", "OrgB"},
                                     {peer_json("a", "OrgA"), peer_json("b", "OrgB")});
    const auto d = endorsement_query(channel_view(state, "ch1"), {"cc"}).at(0);
    CHECK(d.layouts == std::vector<Layout>{Layout{{{"OrgA/member", 1}, {"OrgB/member", 1}}}});
    CHECK(d.endorsers_by_groups.size() == 2);
    CHECK_FALSE(d.endorsers_by_groups.count("OrgC/member"));
}

TEST_CASE("one peer cannot fill two groups it belongs to") {
    // The single peer is both OrgA.member and OrgA.peer, but a layout needing
    // one of each needs two distinct peers.
    const auto state = small_network("AND(OrgA.member, OrgA.peer)", {"OrgA"}, {peer_json("a", "OrgA")});
    CHECK(error_code_of([&] { endorsement_query(channel_view(state, "ch1"), {"cc"}); }) ==
          Errc::no_satisfiable_layout);
}

TEST_CASE("multi-chaincode queries answer in request order") {
    auto state = sample();
    state = apply_event(state, events::ChaincodeDefined{"ch1", "Other", "v1", "OrgC.member"});
    const auto view = channel_view(state, "ch1");
    // Nobody has Other installed.
    CHECK(error_code_of([&] { endorsement_query(view, {"SampleCC", "Other"}); }) == Errc::no_satisfiable_layout);
    state = apply_event(state, events::ChaincodeInstalled{"c1", "ch1", "Other", "v1"});
    const auto ds = endorsement_query(channel_view(state, "ch1"), {"Other", "SampleCC"});
    REQUIRE(ds.size() == 2);
    CHECK(ds[0].chaincode == "Other");
    CHECK(peer_ids(ds[0].endorsers_by_groups.at("OrgC/member")) == std::vector<std::string>{"c1"});
    CHECK(ds[1].chaincode == "SampleCC");
}

TEST_CASE("strict version matching") {
    auto state = sample();
    state = apply_event(state, events::ChaincodeDefined{"ch1", "SampleCC", "v2", "OrgA.member"});
    state = apply_event(state, events::ChaincodeInstalled{"a2", "ch1", "SampleCC", "v2"});
    const auto view = channel_view(state, "ch1");
    ServiceOptions loose;
    CHECK(endorsement_query(view, {"SampleCC"}, loose).at(0).endorsers_by_groups.at("OrgA/member").size() == 3);
    ServiceOptions strict;
    strict.strict_version = true;
    CHECK(peer_ids(endorsement_query(view, {"SampleCC"}, strict).at(0).endorsers_by_groups.at("OrgA/member")) ==
          std::vector<std::string>{"a2"});
}

TEST_CASE("handle_query envelopes") {
    const auto state = sample();
    const auto config = handle_query(state, "a1", query("config"));
    CHECK(config["ok"] == true);
    CHECK(config["id"] == "7");
    CHECK(config["view_seq"] == 0);
    CHECK(config["result"]["orderers"][0] == "orderer0.example.com:7050");

    const auto members = handle_query(state, "a1", query("peer_membership"));
    CHECK(members["result"]["peers"].size() == 8);

    const auto endorsement = handle_query(state, "a1", query("endorsement", "ch1", {{"chaincodes", {"SampleCC"}}}));
    CHECK(endorsement["ok"] == true);
    CHECK(endorsement["result"]["descriptors"][0]["layouts"].size() == 1);

    const auto bad_type = handle_query(state, "a1", query("gossip"));
    CHECK(bad_type["ok"] == false);
    CHECK(bad_type["error"]["code"] == "unknown_query_type");
    CHECK(bad_type["id"] == "7");

    CHECK(handle_query(state, "a1", query("config", "nope"))["error"]["code"] == "unknown_channel");
    CHECK(handle_query(state, "a1", query("endorsement"))["error"]["code"] == "invalid_query");
    CHECK(handle_query(state, "zz", query("config"))["error"]["code"] == "responder_unavailable");
    const auto offline = apply_event(state, events::PeerOffline{"a1"});
    CHECK(handle_query(offline, "a1", query("config"))["error"]["code"] == "responder_unavailable");
    CHECK(handle_query(state, "a1", json::array())["error"]["code"] == "invalid_query");

    ServiceOptions strict;
    strict.strict_channel = true;
    const auto left = apply_event(state, events::PeerLeftChannel{"a1", "ch1"});
    CHECK(handle_query(left, "a1", query("config"))["ok"] == true);
    CHECK(handle_query(left, "a1", query("config"), strict)["error"]["code"] == "unknown_channel");
}

TEST_CASE("queries are pure and repeatable") {
    std::mt19937_64 rng(8);
    for (int iter = 0; iter < 40; ++iter) {
        const auto state = random_network(rng, random_policy_text(rng, {2, 4, principal_pool(rng, 3, true)}), 3, 8);
        const auto before = to_json(state).dump();
        for (const auto& q : {query("config"), query("peer_membership"),
                              query("endorsement", "ch1", {{"chaincodes", {"cc"}}}),
                              json{{"id", "9"}, {"type", "local_membership"}}}) {
            const std::string responder = state.peers.begin()->first;
            CHECK(handle_query(state, responder, q).dump() == handle_query(state, responder, q).dump());
        }
        CHECK(to_json(state).dump() == before);
    }
}

TEST_CASE("descriptor groups agree with the satisfaction graph and are sound") {
    std::mt19937_64 rng(12);
    int answered = 0;
    for (int iter = 0; iter < 150; ++iter) {
        const auto text = random_policy_text(rng, {2, 5, principal_pool(rng, 3, true)});
        const auto state = random_network(rng, text, 3, 10);
        const auto view = channel_view(state, "ch1");
        const auto& policy = state.channels.at("ch1").chaincodes.at("cc").endorsement_policy;
        std::vector<EndorsementDescriptor> ds;
        try {
            ds = endorsement_query(view, {"cc"});
        } catch (const Error& e) {
            CHECK(e.code() == Errc::no_satisfiable_layout);
            continue;
        }
        ++answered;
        const auto& d = ds.at(0);
        const auto graph = build_satisfaction_graph(policy, view, "cc");
        for (const auto& [group, peers] : d.endorsers_by_groups) {
            std::size_t u = graph.principals.size();
            for (std::size_t i = 0; i < graph.principals.size(); ++i)
                if (group_id(graph.principals[i]) == group) u = i;
            REQUIRE(u < graph.principals.size());
            std::vector<std::string> adjacent;
            for (const auto& [pu, pv] : graph.edges)
                if (pu == u) adjacent.push_back(graph.peers[pv].peer_id);
            std::sort(adjacent.begin(), adjacent.end());
            CHECK(peer_ids(peers) == adjacent);
            for (const auto& p : peers) CHECK(state.peers.at(p.peer_id).alive);
        }
        for (const auto& l : d.layouts) {
            CHECK(oracle_satisfies(policy, l.quantities));
            for (const auto& [g, q] : l.quantities) CHECK(d.endorsers_by_groups.at(g).size() >= q);
        }
    }
    CHECK(answered > 20);
}

TEST_CASE("descriptors track membership events") {
    auto state = sample();
    std::mt19937_64 rng(31);
    const std::vector<std::string> all{"a1", "a2", "a3", "b1", "b2", "c1", "c2", "c3"};
    for (int k = 0; k < 60; ++k) {
        const auto& peer = all[rng() % all.size()];
        if (rng() % 2)
            state = apply_event(state, events::PeerOffline{peer});
        else
            state = apply_event(state, events::PeerOnline{peer});
        if (k % 10 == 0)
            state = apply_event(state, events::ChaincodeDefined{"ch1", "SampleCC", "v" + std::to_string(k),
                                                                k % 20 ? "OR(OrgA.member, OrgC.member)"
                                                                       : "AND(OrgA.member, OrgB.member)"});
        const auto& def = state.channels.at("ch1").chaincodes.at("SampleCC");
        try {
            const auto d = endorsement_query(channel_view(state, "ch1"), {"SampleCC"}).at(0);
            CHECK(d.view_seq == state.event_seq);
            for (const auto& [g, peers] : d.endorsers_by_groups)
                for (const auto& p : peers) CHECK(state.peers.at(p.peer_id).alive);
            const auto fresh = compute_layouts(def.endorsement_policy).layouts;
            for (const auto& l : d.layouts) CHECK(std::find(fresh.begin(), fresh.end(), l) != fresh.end());
        } catch (const Error& e) {
            CHECK(e.code() == Errc::no_satisfiable_layout);
        }
    }
}
