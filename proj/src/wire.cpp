#include "discovery/wire.hpp"

#include <array>
#include <boost/asio.hpp>
#include <charconv>
#include <condition_variable>
#include <mutex>

#include "discovery/error.hpp"

namespace discovery::wire {

namespace asio = boost::asio;
using asio::ip::tcp;
using nlohmann::json;

namespace {

std::uint32_t read_be32(const unsigned char* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
           std::uint32_t{p[3]};
}

json parse_body(std::string_view body) {
    json j = json::parse(body.begin(), body.end(), nullptr, false);
    if (j.is_discarded()) throw Error(Errc::invalid_json, "frame body is not valid JSON");
    if (!j.is_object()) throw Error(Errc::invalid_json, "frame body must be a JSON object");
    return j;
}

}  // namespace

std::string encode_frame_body(std::string_view body) {
    if (body.size() > kMaxFrameBody)
        throw Error(Errc::frame_too_large, "frame body of " + std::to_string(body.size()) +
                                               " bytes exceeds the 16 MiB limit");
    const auto n = static_cast<std::uint32_t>(body.size());
    std::string out;
    out.reserve(body.size() + 4);
    out.push_back(static_cast<char>((n >> 24) & 0xff));
    out.push_back(static_cast<char>((n >> 16) & 0xff));
    out.push_back(static_cast<char>((n >> 8) & 0xff));
    out.push_back(static_cast<char>(n & 0xff));
    out.append(body);
    return out;
}

std::string encode_frame(const json& body) { return encode_frame_body(body.dump()); }

DecodedFrame decode_frame(std::string_view bytes) {
    if (bytes.size() < 4) throw Error(Errc::truncated_frame, "frame header is incomplete");
    const std::uint32_t len = read_be32(reinterpret_cast<const unsigned char*>(bytes.data()));
    if (len > kMaxFrameBody)
        throw Error(Errc::frame_too_large,
                    "declared frame length " + std::to_string(len) + " exceeds the 16 MiB limit");
    if (bytes.size() - 4 < len)
        throw Error(Errc::truncated_frame, "frame body is incomplete: expected " +
                                               std::to_string(len) + " bytes, have " +
                                               std::to_string(bytes.size() - 4));
    return {parse_body(bytes.substr(4, len)), std::size_t{len} + 4};
}

std::pair<std::string, std::uint16_t> split_endpoint(std::string_view endpoint) {
    const auto colon = endpoint.rfind(':');
    if (colon == std::string_view::npos || colon + 1 == endpoint.size())
        throw Error(Errc::invalid_query, "endpoint must be host:port, got '" + std::string(endpoint) + "'");
    unsigned port = 0;
    const char* first = endpoint.data() + colon + 1;
    const char* last = endpoint.data() + endpoint.size();
    const auto [ptr, ec] = std::from_chars(first, last, port);
    if (ec != std::errc{} || ptr != last || port > 65535)
        throw Error(Errc::invalid_query, "invalid port in '" + std::string(endpoint) + "'");
    std::string host(endpoint.substr(0, colon));
    if (host.empty()) host = "0.0.0.0";
    return {host, static_cast<std::uint16_t>(port)};
}

// ---------------------------------------------------------------------------
// Server

namespace {

class Session : public std::enable_shared_from_this<Session> {
public:
    Session(tcp::socket socket, const Server& server)
        : socket_(std::move(socket)), server_(server) {}

    void start() { read_header(); }

private:
    void read_header() {
        asio::async_read(socket_, asio::buffer(header_),
                         [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
                             if (!ec) self->on_header();
                         });
    }

    void on_header() {
        const std::uint32_t len = read_be32(header_.data());
        if (len > kMaxFrameBody) {
            // The stream cannot be resynchronized after an oversized header.
            reply(make_error_response("", server_.view_seq(), Errc::frame_too_large,
                                      "declared frame length exceeds the 16 MiB limit"),
                  false);
            return;
        }
        body_.assign(len, '\0');
        asio::async_read(socket_, asio::buffer(body_),
                         [self = shared_from_this()](boost::system::error_code ec, std::size_t) {
                             if (!ec) self->on_body();
                         });
    }

    void on_body() {
        json response;
        try {
            response = server_.respond(parse_body(body_));
        } catch (const Error& e) {
            response = make_error_response("", server_.view_seq(), e.code(), e.what());
        }
        reply(response, true);
    }

    void reply(const json& response, bool keep_open) {
        out_ = encode_frame(response);
        asio::async_write(socket_, asio::buffer(out_),
                          [self = shared_from_this(), keep_open](boost::system::error_code ec,
                                                                 std::size_t) {
                              if (!ec && keep_open) {
                                  self->read_header();
                              } else {
                                  boost::system::error_code ignored;
                                  self->socket_.shutdown(tcp::socket::shutdown_both, ignored);
                              }
                          });
    }

    tcp::socket socket_;
    const Server& server_;
    std::array<unsigned char, 4> header_{};
    std::string body_;
    std::string out_;
};

}  // namespace

struct Server::Impl {
    std::shared_ptr<Network> network;
    ServerConfig config;
    asio::io_context io;
    std::optional<tcp::acceptor> acceptor;
    std::vector<std::thread> threads;
    std::string endpoint;
    std::mutex mutex;
    std::condition_variable stopped_cv;
    bool stopped = false;

    void accept(const Server& server) {
        acceptor->async_accept([this, &server](boost::system::error_code ec, tcp::socket socket) {
            if (ec) return;
            std::make_shared<Session>(std::move(socket), server)->start();
            accept(server);
        });
    }
};

Server::Server(std::shared_ptr<Network> network, ServerConfig config)
    : impl_(std::make_unique<Impl>()) {
    impl_->network = std::move(network);
    impl_->config = std::move(config);
}

Server::~Server() { stop(); }

std::uint16_t Server::start(const std::string& listen_addr) {
    const auto snapshot = impl_->network->snapshot();
    if (!snapshot->peers.count(impl_->config.responder))
        throw Error(Errc::unknown_peer, "responder '" + impl_->config.responder + "' is not in the network");
    auto [host, port] = split_endpoint(listen_addr);
    try {
        tcp::resolver resolver(impl_->io);
        const tcp::endpoint ep = resolver.resolve(host, std::to_string(port))->endpoint();
        impl_->acceptor.emplace(impl_->io);
        impl_->acceptor->open(ep.protocol());
        impl_->acceptor->set_option(tcp::acceptor::reuse_address(true));
        impl_->acceptor->bind(ep);
        impl_->acceptor->listen();
    } catch (const boost::system::system_error& e) {
        throw Error(Errc::bind_error, "cannot listen on " + listen_addr + ": " + e.what());
    }
    const auto bound = impl_->acceptor->local_endpoint();
    impl_->endpoint = host + ":" + std::to_string(bound.port());
    impl_->accept(*this);
    for (std::size_t i = 0; i < std::max<std::size_t>(1, impl_->config.threads); ++i)
        impl_->threads.emplace_back([this] { impl_->io.run(); });
    return bound.port();
}

void Server::stop() {
    if (!impl_) return;
    impl_->io.stop();
    for (auto& t : impl_->threads)
        if (t.joinable()) t.join();
    impl_->threads.clear();
    {
        std::lock_guard lock(impl_->mutex);
        impl_->stopped = true;
    }
    impl_->stopped_cv.notify_all();
}

void Server::wait() {
    std::unique_lock lock(impl_->mutex);
    impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

std::string Server::endpoint() const { return impl_->endpoint; }

std::uint64_t Server::view_seq() const { return impl_->network->snapshot()->event_seq; }

json Server::respond(const json& request) const {
    return handle_query(*impl_->network->snapshot(), impl_->config.responder, request,
                        impl_->config.options);
}

// ---------------------------------------------------------------------------
// Client connection

struct Connection::Impl {
    asio::io_context io;
    tcp::socket socket{io};
};

Connection::Connection(const std::string& endpoint) : impl_(std::make_unique<Impl>()) {
    auto [host, port] = split_endpoint(endpoint);
    try {
        tcp::resolver resolver(impl_->io);
        asio::connect(impl_->socket, resolver.resolve(host, std::to_string(port)));
    } catch (const boost::system::system_error& e) {
        throw Error(Errc::transport_error, "cannot connect to " + endpoint + ": " + e.what());
    }
}

Connection::~Connection() = default;

void Connection::send_raw(std::string_view bytes) {
    try {
        asio::write(impl_->socket, asio::buffer(bytes.data(), bytes.size()));
    } catch (const boost::system::system_error& e) {
        throw Error(Errc::transport_error, std::string("send failed: ") + e.what());
    }
}

std::string Connection::read_frame_body() {
    std::array<unsigned char, 4> header{};
    try {
        asio::read(impl_->socket, asio::buffer(header));
        const std::uint32_t len = read_be32(header.data());
        if (len > kMaxFrameBody) throw Error(Errc::frame_too_large, "response frame too large");
        std::string body(len, '\0');
        asio::read(impl_->socket, asio::buffer(body));
        return body;
    } catch (const boost::system::system_error& e) {
        throw Error(Errc::transport_error, std::string("receive failed: ") + e.what());
    }
}

json Connection::request(const json& query) {
    send_raw(encode_frame(query));
    return parse_body(read_frame_body());
}

}  // namespace discovery::wire
