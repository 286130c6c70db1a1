#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace discovery {

enum class Errc {
    syntax_error,
    arity_error,
    index_out_of_range,
    invalid_principal,
    layout_explosion,
    oracle_too_large,
    schema_error,
    dangling_reference,
    policy_error,
    height_regression,
    conflict,
    unknown_channel,
    unknown_peer,
    responder_unavailable,
    unknown_query_type,
    invalid_query,
    unknown_chaincode,
    no_satisfiable_layout,
    insufficient_peers,
    empty_response_set,
    frame_too_large,
    truncated_frame,
    invalid_json,
    bind_error,
    transport_error,
    all_bootstrap_peers_unreachable,
    scenario_parse_error,
    assertion_failed,
};

/// Wire name of an error code, e.g. Errc::no_satisfiable_layout -> "no_satisfiable_layout".
std::string_view to_string(Errc code);

/// Inverse of to_string; unrecognized names map to transport_error.
Errc errc_from_string(std::string_view name);

/// Every domain failure in the library is reported as an Error carrying a
/// stable code. The code doubles as the "code" field of error responses.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace discovery
