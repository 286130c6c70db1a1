#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace discovery {

using Bytes = std::vector<std::uint8_t>;

enum class Role { member, peer, admin };

std::string_view to_string(Role role);
/// Accepts "member", "peer" or "admin". Throws Error(invalid_principal) otherwise.
Role role_from_string(std::string_view text);

struct Principal {
    std::string msp_id;
    Role role = Role::member;

    auto operator<=>(const Principal&) const = default;
};

struct Identity {
    std::string id;
    std::string msp_id;
    Role role = Role::peer;
    Bytes verification_key;

    bool operator==(const Identity&) const = default;
};

struct Signature {
    std::string signer_id;
    Bytes payload_digest;
    Bytes tag;

    bool operator==(const Signature&) const = default;
};

struct Endorsement {
    Identity identity;
    Signature signature;
    Bytes payload_digest;

    bool operator==(const Endorsement&) const = default;
};

/// Vertex of a signature-policy tree. A leaf points into the policy's
/// principal array; an inner vertex is satisfied when at least `threshold`
/// of its children are.
struct PolicyNode {
    enum class Kind { leaf, n_out_of };

    Kind kind = Kind::leaf;
    std::size_t principal_index = 0;
    std::uint32_t threshold = 0;
    std::vector<PolicyNode> children;

    static PolicyNode leaf(std::size_t principal_index);
    static PolicyNode n_out_of(std::uint32_t threshold, std::vector<PolicyNode> children);

    bool is_leaf() const noexcept { return kind == Kind::leaf; }
    bool operator==(const PolicyNode&) const = default;
};

struct SignaturePolicy {
    std::vector<Principal> principals;
    PolicyNode root;

    bool operator==(const SignaturePolicy&) const = default;
};

/// Canonical group name "msp_id/role", e.g. "OrgA/member".
std::string group_id(const Principal& principal);

bool is_valid_msp_id(std::string_view msp_id);

/// Parses the policy DSL:
///
///   expr := AND(expr, ...) | OR(expr, ...) | OutOf(n, expr, ...) | ident.role
///
/// Keywords are case-insensitive, a principal may be wrapped in single
/// quotes, whitespace is ignored. AND over k arguments becomes OutOf(k, ...)
/// and OR becomes OutOf(1, ...). Each distinct principal gets one slot in the
/// principal array, ordered by first appearance; repeated mentions still
/// produce distinct leaves.
///
/// Throws Error(syntax_error) with the byte offset in the message, or
/// Error(arity_error) for an out-of-range OutOf threshold.
SignaturePolicy parse_policy(std::string_view text);

/// Renders a policy back into the DSL. parse_policy(to_dsl(p)) reproduces p
/// for every p that parse_policy can return.
std::string to_dsl(const SignaturePolicy& policy);

/// Throws Error(index_out_of_range), Error(arity_error) or
/// Error(invalid_principal) when the policy is structurally invalid.
void validate_policy(const SignaturePolicy& policy);

/// MEMBER principals accept any role within the msp.
bool satisfies_principal(const Identity& identity, const Principal& principal);

std::size_t leaf_count(const PolicyNode& node);

/// Decides whether the endorsements satisfy the policy over `payload_digest`.
///
/// Endorsements are discarded when their digest differs from payload_digest,
/// their signature is not by their identity, or the signature fails to verify.
/// Remaining endorsements are deduplicated by identity id, and each identity
/// may be counted for at most one leaf.
bool evaluate(const SignaturePolicy& policy, std::span<const Endorsement> endorsements,
              const Bytes& payload_digest);

/// Wire form: {"principals":[{"msp":..,"role":..}], "root":{"n":k,"children":[{"leaf":i}]}}.
nlohmann::json to_json(const SignaturePolicy& policy);
/// Throws Error(schema_error) on malformed input, then validates the result.
SignaturePolicy policy_from_json(const nlohmann::json& j);

}  // namespace discovery
