#include <thread>

#include "doctest.h"
#include "support.hpp"

#include "discovery/client.hpp"
#include "discovery/error.hpp"
#include "discovery/wire.hpp"

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

struct Running {
    std::shared_ptr<Network> network;
    wire::Server server;

    Running(NetworkState state, const std::string& responder)
        : network(std::make_shared<Network>(std::move(state))), server(network, {responder, {}, 2}) {
        server.start("127.0.0.1:0");
    }
};

// An endpoint with nothing listening: bind an ephemeral port, then release it.
std::string dead_endpoint() {
    auto network = std::make_shared<Network>(sample());
    wire::Server s(network, {"a1", {}, 1});
    s.start("127.0.0.1:0");
    const auto ep = s.endpoint();
    s.stop();
    return ep;
}

}  // namespace

TEST_CASE("frame encoding") {
    const json q = {{"id", "1"}, {"type", "config"}, {"channel", "ch1"}};
    const auto frame = wire::encode_frame(q);
    const std::string_view body = R"({"channel":"ch1","id":"1","type":"config"})";
    REQUIRE(frame.size() == 4 + body.size());
    CHECK(frame.substr(0, 4) == std::string("\x00\x00\x00\x2a", 4));
    CHECK(frame.substr(4) == body);
    const auto decoded = wire::decode_frame(frame);
    CHECK(decoded.body == q);
    CHECK(decoded.consumed == frame.size());

    // Two frames back to back decode one at a time.
    const auto both = frame + wire::encode_frame({{"id", "2"}});
    const auto first = wire::decode_frame(both);
    CHECK(wire::decode_frame(std::string_view(both).substr(first.consumed)).body["id"] == "2");
}

TEST_CASE("frame errors") {
    const std::string big(20U * 1024U * 1024U, 'x');
    CHECK(error_code_of([&] { wire::encode_frame({{"blob", big}}); }) == Errc::frame_too_large);
    std::string header("\x01\x40\x00\x00", 4);  // 20 MiB
    CHECK(error_code_of([&] { wire::decode_frame(header); }) == Errc::frame_too_large);
    CHECK(error_code_of([&] { wire::decode_frame(std::string("\x00\x00", 2)); }) == Errc::truncated_frame);
    CHECK(error_code_of([&] { wire::decode_frame(std::string("\x00\x00\x00\x05{}", 6)); }) == Errc::truncated_frame);
    CHECK(error_code_of([&] { wire::decode_frame(wire::encode_frame_body("{nope")); }) == Errc::invalid_json);
    CHECK(error_code_of([&] { wire::decode_frame(wire::encode_frame_body("[1,2]")); }) == Errc::invalid_json);
}

TEST_CASE("random bytes never crash the decoder") {
    std::mt19937_64 rng(77);
    for (int iter = 0; iter < 3000; ++iter) {
        std::string bytes(rng() % 40, '\0');
        for (auto& c : bytes) c = static_cast<char>(rng() & 0xff);
        if (iter % 3 == 0 && bytes.size() >= 4) {
            const auto n = static_cast<std::uint32_t>(bytes.size() - 4);
            bytes[0] = bytes[1] = bytes[2] = 0;
            bytes[3] = static_cast<char>(n);
        }
        try {
            const auto d = wire::decode_frame(bytes);
            CHECK(d.consumed <= bytes.size());
            CHECK(d.body.is_object());
        } catch (const Error& e) {
            const bool expected = e.code() == Errc::truncated_frame || e.code() == Errc::frame_too_large ||
                                  e.code() == Errc::invalid_json;
            CHECK(expected);
        }
    }
}

TEST_CASE("endpoints") {
    CHECK(wire::split_endpoint("h:80") == std::pair<std::string, std::uint16_t>{"h", 80});
    CHECK(error_code_of([] { wire::split_endpoint("h"); }) == Errc::invalid_query);
    CHECK(error_code_of([] { wire::split_endpoint("h:99999"); }) == Errc::invalid_query);
    CHECK(error_code_of([] { wire::split_endpoint("h:x"); }) == Errc::invalid_query);
}

TEST_CASE("server answers like the in-process handler") {
    Running r(sample(), "a1");
    const auto state = r.network->snapshot();
    const std::vector<json> queries{
        {{"id", "1"}, {"type", "config"}, {"channel", "ch1"}},
        {{"id", "2"}, {"type", "peer_membership"}, {"channel", "ch1"}},
        {{"id", "3"}, {"type", "endorsement"}, {"channel", "ch1"}, {"payload", {{"chaincodes", {"SampleCC"}}}}},
        {{"id", "4"}, {"type", "local_membership"}},
        {{"id", "5"}, {"type", "nope"}, {"channel", "ch1"}},
    };
    wire::Connection c(r.server.endpoint());
    for (const auto& q : queries) {
        c.send_raw(wire::encode_frame(q));
        CHECK(c.read_frame_body() == handle_query(*state, "a1", q).dump());
    }
}

TEST_CASE("pipelined requests are answered in order") {
    Running r(sample(), "a1");
    wire::Connection c(r.server.endpoint());
    std::string batch;
    for (int i = 0; i < 25; ++i)
        batch += wire::encode_frame({{"id", std::to_string(i)}, {"type", "config"}, {"channel", "ch1"}});
    c.send_raw(batch);
    for (int i = 0; i < 25; ++i) CHECK(json::parse(c.read_frame_body())["id"] == std::to_string(i));
}

TEST_CASE("bad frames get error responses") {
    Running r(sample(), "a1");
    {
        wire::Connection c(r.server.endpoint());
        c.send_raw(wire::encode_frame_body("this is not json"));
        const auto reply = json::parse(c.read_frame_body());
        CHECK(reply["ok"] == false);
        CHECK(reply["error"]["code"] == "invalid_json");
        // The connection is still usable.
        CHECK(c.request({{"id", "after"}, {"type", "config"}, {"channel", "ch1"}})["ok"] == true);
    }
    {
        wire::Connection c(r.server.endpoint());
        c.send_raw(std::string("\x7f\x00\x00\x00", 4));
        const auto reply = json::parse(c.read_frame_body());
        CHECK(reply["error"]["code"] == "frame_too_large");
    }
    // The server keeps accepting new connections.
    CHECK(send_query(r.server.endpoint(), {{"id", "x"}, {"type", "config"}, {"channel", "ch1"}})["ok"] == true);
}

TEST_CASE("concurrent clients") {
    Running r(sample(), "a1");
    std::vector<std::thread> threads;
    std::atomic<int> ok{0};
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&, t] {
            wire::Connection c(r.server.endpoint());
            for (int i = 0; i < 20; ++i) {
                const auto id = std::to_string(t) + "-" + std::to_string(i);
                const auto reply = c.request({{"id", id}, {"type", "peer_membership"}, {"channel", "ch1"}});
                if (reply["id"] == id && reply["result"]["peers"].size() == 8) ++ok;
            }
        });
    for (auto& th : threads) th.join();
    CHECK(ok == 80);
}

TEST_CASE("server start errors") {
    auto network = std::make_shared<Network>(sample());
    wire::Server unknown(network, {"zz", {}, 1});
    CHECK(error_code_of([&] { unknown.start("127.0.0.1:0"); }) == Errc::unknown_peer);

    wire::Server first(network, {"a1", {}, 1});
    first.start("127.0.0.1:0");
    wire::Server second(network, {"a1", {}, 1});
    CHECK(error_code_of([&] { second.start(first.endpoint()); }) == Errc::bind_error);

    wire::Server named(network, {"a1", {}, 1});
    CHECK(named.start("localhost:0") > 0);
}

TEST_CASE("bootstrap fails over and aggregates failures") {
    Running r(sample(), "a1");
    const auto dead = dead_endpoint();
    ClientConfig config;
    config.channel = "ch1";
    config.bootstrap_endpoints = {dead, r.server.endpoint()};
    const auto ctx = bootstrap(config);
    CHECK(ctx.source_endpoint == r.server.endpoint());
    CHECK(ctx.config == config_query(channel_view(*r.network->snapshot(), "ch1")));

    config.bootstrap_endpoints = {dead, dead};
    try {
        bootstrap(config);
        FAIL("expected all_bootstrap_peers_unreachable");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::all_bootstrap_peers_unreachable);
        CHECK(std::string(e.what()).find(dead) != std::string::npos);
    }

    // A reachable peer answering with an error is also a bootstrap failure.
    config.channel = "nope";
    config.bootstrap_endpoints = {r.server.endpoint()};
    CHECK(error_code_of([&] { bootstrap(config); }) == Errc::all_bootstrap_peers_unreachable);
}

TEST_CASE("discover endorsers end to end") {
    Running r(sample(), "a1");
    ClientConfig config;
    config.channel = "ch1";
    config.bootstrap_endpoints = {r.server.endpoint()};
    const auto ctx = bootstrap(config);

    const auto d = discover_endorsers(ctx, "SampleCC");
    CHECK(d == endorsement_query(channel_view(*r.network->snapshot(), "ch1"), {"SampleCC"}).at(0));
    CHECK(d.layouts.size() == 1);
    CHECK(discover_peers(ctx).size() == 8);

    r.network->apply(events::ChaincodeDefined{"ch1", "SampleCC", "v1", "OR(OrgA.member, OrgC.member)"});
    const auto d2 = discover_endorsers(ctx, "SampleCC");
    CHECK(d2.layouts == std::vector<Layout>{Layout{{{"OrgA/member", 1}}}, Layout{{{"OrgC/member", 1}}}});
    CHECK(d2.view_seq == 1);
    CHECK_FALSE(d2.endorsers_by_groups.count("OrgB/member"));

    CHECK(error_code_of([&] { discover_endorsers(ctx, "Missing"); }) == Errc::unknown_chaincode);
}
