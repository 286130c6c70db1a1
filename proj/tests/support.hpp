#pragma once

// Test-only oracles and generators. The oracles here deliberately share no
// code with the evaluation and layout paths they check.

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "discovery/crypto.hpp"
#include "discovery/layout.hpp"
#include "discovery/membership.hpp"
#include "discovery/policy.hpp"
#include "discovery/service.hpp"

namespace testsupport {

using namespace discovery;

inline Endorsement endorse(const std::string& id, const std::string& msp, Role role, const Bytes& digest) {
    Identity identity = make_peer_identity(id, msp, role);
    Signature sig{id, digest, crypto::sim_sign(identity.verification_key, digest)};
    return Endorsement{std::move(identity), std::move(sig), digest};
}

inline Bytes digest_of(const std::string& text) { return crypto::sha256(text); }

// ---------------------------------------------------------------------------
// Brute-force evaluation: try every injective assignment of valid
// endorsements to leaves and evaluate the threshold tree on the result.

inline void flatten_leaves(const SignaturePolicy& policy, const PolicyNode& node,
                           std::vector<Principal>& out) {
    if (node.is_leaf()) {
        out.push_back(policy.principals[node.principal_index]);
        return;
    }
    for (const auto& c : node.children) flatten_leaves(policy, c, out);
}

inline bool tree_holds(const PolicyNode& node, const std::vector<bool>& chosen, std::size_t& cursor) {
    if (node.is_leaf()) return chosen[cursor++];
    std::size_t count = 0;
    for (const auto& c : node.children) count += tree_holds(c, chosen, cursor) ? 1 : 0;
    return count >= node.threshold;
}

inline bool brute_force_evaluate(const SignaturePolicy& policy, const std::vector<Endorsement>& endorsements,
                                 const Bytes& digest) {
    std::vector<Identity> valid;
    for (const auto& e : endorsements) {
        const bool ok = e.payload_digest == digest && e.signature.payload_digest == digest &&
                        e.signature.signer_id == e.identity.id &&
                        crypto::sim_sign(e.identity.verification_key, digest) == e.signature.tag;
        const bool dup = std::any_of(valid.begin(), valid.end(),
                                     [&](const Identity& v) { return v.id == e.identity.id; });
        if (ok && !dup) valid.push_back(e.identity);
    }
    std::vector<Principal> leaves;
    flatten_leaves(policy, policy.root, leaves);
    std::vector<bool> chosen(leaves.size(), false);
    std::vector<bool> used(valid.size(), false);

    std::function<bool(std::size_t)> search = [&](std::size_t i) -> bool {
        if (i == leaves.size()) {
            std::size_t cursor = 0;
            return tree_holds(policy.root, chosen, cursor);
        }
        if (search(i + 1)) return true;
        for (std::size_t e = 0; e < valid.size(); ++e) {
            if (used[e]) continue;
            const bool msp_ok = valid[e].msp_id == leaves[i].msp_id;
            const bool role_ok = leaves[i].role == Role::member || leaves[i].role == valid[e].role;
            if (!msp_ok || !role_ok) continue;
            used[e] = true;
            chosen[i] = true;
            const bool found = search(i + 1);
            used[e] = false;
            chosen[i] = false;
            if (found) return true;
        }
        return false;
    };
    return search(0);
}

// ---------------------------------------------------------------------------
// Minimal satisfying multisets by exhaustive enumeration over every multiset
// of the policy's groups with total at most the leaf count.

inline std::vector<Layout> brute_force_minimal_layouts(const SignaturePolicy& policy) {
    std::vector<std::string> groups;
    for (const auto& p : policy.principals) {
        const auto g = group_id(p);
        if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
    }
    const auto max_total = static_cast<std::uint32_t>(leaf_count(policy.root));
    std::vector<std::map<std::string, std::uint32_t>> satisfying;
    std::map<std::string, std::uint32_t> current;
    std::function<void(std::size_t, std::uint32_t)> walk = [&](std::size_t gi, std::uint32_t left) {
        if (gi == groups.size()) {
            std::map<std::string, std::uint32_t> m;
            for (const auto& [g, c] : current)
                if (c) m[g] = c;
            if (oracle_satisfies(policy, m)) satisfying.push_back(m);
            return;
        }
        for (std::uint32_t c = 0; c <= left; ++c) {
            current[groups[gi]] = c;
            walk(gi + 1, left - c);
        }
        current.erase(groups[gi]);
    };
    walk(0, max_total);

    std::set<std::map<std::string, std::uint32_t>> sat_set(satisfying.begin(), satisfying.end());
    std::vector<Layout> minimal;
    for (const auto& m : satisfying) {
        bool is_minimal = true;
        for (const auto& [g, c] : m) {
            auto smaller = m;
            if (--smaller[g] == 0) smaller.erase(g);
            if (sat_set.count(smaller)) {
                is_minimal = false;
                break;
            }
        }
        if (is_minimal) minimal.push_back(Layout{m});
    }
    std::sort(minimal.begin(), minimal.end(), canonical_less);
    return minimal;
}

// ---------------------------------------------------------------------------
// Generators

struct PolicyShape {
    int max_depth = 3;       // NOutOf levels
    std::size_t max_leaves = 8;
    std::vector<Principal> pool;  // principals to draw leaves from
};

inline std::string principal_text(const Principal& p) {
    return p.msp_id + "." + std::string(to_string(p.role));
}

inline std::string random_policy_text(std::mt19937_64& rng, const PolicyShape& shape) {
    auto uniform = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    std::function<std::string(int, std::size_t)> gen = [&](int depth, std::size_t leaves) -> std::string {
        if (leaves == 1 && (depth >= shape.max_depth || uniform(0, 2) != 0))
            return principal_text(shape.pool[uniform(0, shape.pool.size() - 1)]);
        std::vector<std::size_t> parts;
        if (depth + 1 >= shape.max_depth) {
            parts.assign(leaves, 1);
        } else {
            std::size_t left = leaves;
            const std::size_t k = uniform(1, std::min<std::size_t>(leaves, 4));
            for (std::size_t i = 0; i + 1 < k; ++i) {
                const std::size_t take = uniform(1, left - (k - i - 1));
                parts.push_back(take);
                left -= take;
            }
            parts.push_back(left);
        }
        const std::size_t n = uniform(1, parts.size());
        std::string out = "OutOf(" + std::to_string(n);
        for (auto p : parts) out += ", " + gen(depth + 1, p);
        return out + ")";
    };
    return gen(0, uniform(1, shape.max_leaves));
}

inline std::vector<Principal> principal_pool(std::mt19937_64& rng, std::size_t orgs, bool mixed_roles) {
    std::vector<Principal> pool;
    for (std::size_t i = 0; i < orgs; ++i) {
        const std::string msp = "Org" + std::string(1, static_cast<char>('A' + i));
        pool.push_back({msp, Role::member});
        if (mixed_roles) {
            pool.push_back({msp, Role::peer});
            if (std::uniform_int_distribution<int>(0, 3)(rng) == 0) pool.push_back({msp, Role::admin});
        }
    }
    return pool;
}

inline nlohmann::json org_json(const std::string& msp) {
    return {{"msp", msp},
            {"ca_cert", crypto::base64_encode(crypto::to_bytes("ca-" + msp))},
            {"tls_ca_cert", crypto::base64_encode(crypto::to_bytes("tls-" + msp))}};
}

/// Random network with one or two channels, <= max_orgs orgs and <= max_peers peers;
/// channel "ch1" defines chaincode "cc" with the given policy.
inline NetworkState random_network(std::mt19937_64& rng, const std::string& policy, std::size_t max_orgs,
                                   std::size_t max_peers) {
    auto uniform = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    const std::size_t orgs = uniform(1, max_orgs);
    nlohmann::json ch1 = {{"name", "ch1"}, {"orgs", nlohmann::json::array()}, {"orderers", {"o1:7050", "o2:7050"}}};
    for (std::size_t i = 0; i < orgs; ++i) ch1["orgs"].push_back(org_json("Org" + std::string(1, char('A' + i))));
    ch1["chaincodes"] = {{{"name", "cc"}, {"version", "v1"}, {"policy", policy}}};
    nlohmann::json ch2 = {{"name", "ch2"}, {"orgs", {org_json("OrgA")}}, {"orderers", {"o1:7050"}}};
    nlohmann::json net = {{"channels", {ch1, ch2}}, {"peers", nlohmann::json::array()}};
    const std::size_t peers = uniform(1, max_peers);
    for (std::size_t i = 0; i < peers; ++i) {
        const std::string id = "p" + std::to_string(i);
        const std::string msp = "Org" + std::string(1, char('A' + uniform(0, orgs - 1)));
        nlohmann::json p = {{"id", id},
                            {"msp", msp},
                            {"role", uniform(0, 9) == 0 ? "admin" : "peer"},
                            {"endpoint", id + ":7051"},
                            {"alive", uniform(0, 4) != 0}};
        nlohmann::json channels = nlohmann::json::array();
        if (uniform(0, 5) != 0) {
            channels.push_back("ch1");
            if (uniform(0, 4) != 0) p["installed"]["ch1"] = {uniform(0, 3) ? "cc@v1" : "cc@v0"};
            p["heights"]["ch1"] = uniform(0, 20);
        }
        if (uniform(0, 2) == 0) channels.push_back("ch2");
        p["channels"] = channels;
        net["peers"].push_back(p);
    }
    return new_network(net);
}

}  // namespace testsupport
