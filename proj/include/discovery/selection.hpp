#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "discovery/service.hpp"

namespace discovery {

enum class PeerChoice { random, prefer_height, exclude_then_random };
enum class LayoutChoice { first, fewest_peers, random };

struct SelectionStrategy {
    PeerChoice peers = PeerChoice::random;
    LayoutChoice layout = LayoutChoice::first;
    /// Peers the client believes are offline; honored by exclude_then_random.
    std::set<std::string> deny;
};

PeerChoice peer_choice_from_string(std::string_view text);
LayoutChoice layout_choice_from_string(std::string_view text);
std::string_view to_string(PeerChoice choice);
std::string_view to_string(LayoutChoice choice);

struct SelectionResult {
    std::vector<PeerInfo> peers;  // sorted by peer id
    std::map<std::string, std::vector<std::string>> assignment;  // group -> chosen peer ids
    Layout layout_used;
    std::uint64_t seed_used = 0;

    bool operator==(const SelectionResult&) const = default;
};

/// Picks the peers to request endorsements from.
///
/// The layout is chosen per strategy.layout. Groups are then filled in
/// canonical (group id) order: candidates are ordered by a seeded shuffle of
/// the group's peers sorted by id (stably re-sorted by descending ledger
/// height for prefer_height), and taken front to back. A peer serves at most
/// one group; a candidate is skipped when taking it would leave a later
/// group unfillable. Without overlapping groups this is exactly the
/// shuffle-prefix draw.
///
/// Throws Error(insufficient_peers) naming the first group that cannot be filled.
SelectionResult select_endorsers(const EndorsementDescriptor& descriptor,
                                 const SelectionStrategy& strategy, std::uint64_t seed);

/// True iff every response carries byte-identical payload digests.
/// Throws Error(empty_response_set) for an empty list.
bool check_consistency(std::span<const Endorsement> responses);

bool validate_endorsement_set(const SignaturePolicy& policy, std::span<const Endorsement> responses,
                              const Bytes& payload_digest);

nlohmann::json to_json(const SelectionResult& result);

}  // namespace discovery
