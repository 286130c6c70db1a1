#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "discovery/membership.hpp"
#include "discovery/service.hpp"

namespace discovery::wire {

// Frame: 4-byte big-endian body length, then exactly that many bytes of
// UTF-8 JSON holding a single object.
inline constexpr std::uint32_t kMaxFrameBody = 16U * 1024U * 1024U;

/// Throws Error(frame_too_large) if the serialized body exceeds the limit.
std::string encode_frame(const nlohmann::json& body);
std::string encode_frame_body(std::string_view body);

struct DecodedFrame {
    nlohmann::json body;
    std::size_t consumed = 0;  // header + body bytes
};

/// Decodes the first frame in `bytes`. Checks the declared length before
/// touching the body, so arbitrary input never triggers large allocations.
/// Throws Error(truncated_frame), Error(frame_too_large) or Error(invalid_json).
DecodedFrame decode_frame(std::string_view bytes);

/// Splits "host:port"; throws Error(invalid_query) when malformed.
std::pair<std::string, std::uint16_t> split_endpoint(std::string_view endpoint);

struct ServerConfig {
    std::string responder;
    ServiceOptions options;
    std::size_t threads = 2;
};

/// Discovery server. Connections are served concurrently; requests on one
/// connection are answered one at a time, in order, each against a fresh
/// snapshot of the network.
class Server {
public:
    Server(std::shared_ptr<Network> network, ServerConfig config);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts serving; port 0 picks an ephemeral port.
    /// Returns the bound port. Throws Error(bind_error).
    std::uint16_t start(const std::string& listen_addr);
    void stop();
    /// Blocks until stop() is called from another thread.
    void wait();

    std::string endpoint() const;
    std::uint64_t view_seq() const;

    /// The response the server sends for one decoded request body.
    nlohmann::json respond(const nlohmann::json& request) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Blocking client connection.
class Connection {
public:
    /// Throws Error(transport_error) when the endpoint is unreachable.
    explicit Connection(const std::string& endpoint);
    ~Connection();

    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;

    void send_raw(std::string_view bytes);
    /// Reads one response frame and returns its body bytes verbatim.
    std::string read_frame_body();

    nlohmann::json request(const nlohmann::json& query);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace discovery::wire
