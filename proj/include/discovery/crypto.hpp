#pragma once

#include <string>
#include <string_view>

#include "discovery/policy.hpp"

// Simulated signature scheme. A signer holds a 32-byte secret and its
// verification key is the same secret; tags are HMAC-SHA256(secret, digest).
// This stands in for a real PKI and offers no security against key holders.
namespace discovery::crypto {

inline constexpr std::size_t kSecretSize = 32;

Bytes sim_sign(const Bytes& signer_secret, const Bytes& payload_digest);

/// Constant-time comparison of `tag` against the expected tag.
bool sim_verify(const Bytes& verification_key, const Bytes& payload_digest, const Bytes& tag);

/// Deterministic per-identity secret used by the simulated network, so that
/// every process derives the same key for the same identity id.
Bytes derive_secret(std::string_view identity_id);

Bytes sha256(std::string_view data);
Bytes sha256(const Bytes& data);

std::string to_hex(const Bytes& bytes);

std::string base64_encode(const Bytes& bytes);
/// Throws Error(schema_error) on malformed input.
Bytes base64_decode(std::string_view text);

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

}  // namespace discovery::crypto
