#include "discovery/error.hpp"

#include <array>
#include <utility>

namespace discovery {

namespace {

constexpr std::array<std::pair<Errc, std::string_view>, 28> kNames{{
    {Errc::syntax_error, "syntax_error"},
    {Errc::arity_error, "arity_error"},
    {Errc::index_out_of_range, "index_out_of_range"},
    {Errc::invalid_principal, "invalid_principal"},
    {Errc::layout_explosion, "layout_explosion"},
    {Errc::oracle_too_large, "oracle_too_large"},
    {Errc::schema_error, "schema_error"},
    {Errc::dangling_reference, "dangling_reference"},
    {Errc::policy_error, "policy_error"},
    {Errc::height_regression, "height_regression"},
    {Errc::conflict, "conflict"},
    {Errc::unknown_channel, "unknown_channel"},
    {Errc::unknown_peer, "unknown_peer"},
    {Errc::responder_unavailable, "responder_unavailable"},
    {Errc::unknown_query_type, "unknown_query_type"},
    {Errc::invalid_query, "invalid_query"},
    {Errc::unknown_chaincode, "unknown_chaincode"},
    {Errc::no_satisfiable_layout, "no_satisfiable_layout"},
    {Errc::insufficient_peers, "insufficient_peers"},
    {Errc::empty_response_set, "empty_response_set"},
    {Errc::frame_too_large, "frame_too_large"},
    {Errc::truncated_frame, "truncated_frame"},
    {Errc::invalid_json, "invalid_json"},
    {Errc::bind_error, "bind_error"},
    {Errc::transport_error, "transport_error"},
    {Errc::all_bootstrap_peers_unreachable, "all_bootstrap_peers_unreachable"},
    {Errc::scenario_parse_error, "scenario_parse_error"},
    {Errc::assertion_failed, "assertion_failed"},
}};

}  // namespace

std::string_view to_string(Errc code) {
    for (const auto& [c, name] : kNames)
        if (c == code) return name;
    return "unknown";
}

Errc errc_from_string(std::string_view name) {
    for (const auto& [c, n] : kNames)
        if (n == name) return c;
    return Errc::transport_error;
}

}  // namespace discovery
