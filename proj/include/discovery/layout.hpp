#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "discovery/policy.hpp"

namespace discovery {

/// Histogram from group id to the number of distinct signers required from
/// that group. One layout is one self-sufficient way to satisfy a policy.
struct Layout {
    std::map<std::string, std::uint32_t> quantities;

    std::uint64_t total() const;
    /// True when every group of *this needs no more than `other` supplies.
    bool covered_by(const Layout& other) const;

    bool operator==(const Layout&) const = default;
};

/// Ascending by total, then lexicographic over the sorted (group, count) pairs.
bool canonical_less(const Layout& a, const Layout& b);

struct LayoutSet {
    std::vector<Layout> layouts;
    Bytes source_policy_digest;
};

inline constexpr std::size_t kDefaultLayoutCap = 1024;

struct LayoutOptions {
    std::size_t cap = kDefaultLayoutCap;
    bool prune_dominated = true;
};

/// Enumerates the leaf histograms of every satisfying sub-tree of the policy.
///
/// Children of an NOutOf(n) vertex are combined over all n-subsets. The
/// working set is built incrementally child by child, so the cap bounds the
/// number of distinct partial layouts held at any vertex; exceeding it throws
/// Error(layout_explosion) naming the vertex path (e.g. "root/2/0").
LayoutSet compute_layouts(const SignaturePolicy& policy, const LayoutOptions& options = {});

/// Minimal antichain under componentwise domination, in canonical order.
std::vector<Layout> prune_dominated(std::vector<Layout> layouts);

inline constexpr std::uint32_t kOracleMaxUnits = 12;
inline constexpr std::size_t kOracleMaxLeaves = 20;

/// Exhaustive check: is there a set of leaves, each matched to a distinct unit
/// of `multiset` with an equal group id, that makes the policy tree true?
/// Independent of compute_layouts; throws Error(oracle_too_large) beyond
/// kOracleMaxUnits units or kOracleMaxLeaves leaves.
bool oracle_satisfies(const SignaturePolicy& policy,
                      const std::map<std::string, std::uint32_t>& multiset);

nlohmann::json to_json(const Layout& layout);
Layout layout_from_json(const nlohmann::json& j);

}  // namespace discovery
