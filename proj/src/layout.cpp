#include "discovery/layout.hpp"
#include "discovery/json_util.hpp"

#include <algorithm>
#include <set>

#include "discovery/crypto.hpp"
#include "discovery/error.hpp"

namespace discovery {

std::uint64_t Layout::total() const {
    std::uint64_t sum = 0;
    for (const auto& [group, count] : quantities) sum += count;
    return sum;
}

bool Layout::covered_by(const Layout& other) const {
    for (const auto& [group, count] : quantities) {
        const auto it = other.quantities.find(group);
        if (it == other.quantities.end() || it->second < count) return false;
    }
    return true;
}

bool canonical_less(const Layout& a, const Layout& b) {
    const auto ta = a.total();
    const auto tb = b.total();
    if (ta != tb) return ta < tb;
    return std::lexicographical_compare(a.quantities.begin(), a.quantities.end(),
                                        b.quantities.begin(), b.quantities.end());
}

namespace {

struct CanonicalLess {
    bool operator()(const Layout& a, const Layout& b) const { return canonical_less(a, b); }
};

using LayoutBag = std::set<Layout, CanonicalLess>;

Layout combine(const Layout& a, const Layout& b) {
    Layout out = a;
    for (const auto& [group, count] : b.quantities) out.quantities[group] += count;
    return out;
}

void minimize(LayoutBag& bag) {
    std::vector<Layout> kept;
    // Canonical order visits smaller totals first, and a dominating layout
    // always has a strictly smaller total than the layouts it dominates.
    for (const auto& candidate : bag) {
        const bool dominated = std::any_of(kept.begin(), kept.end(), [&](const Layout& k) {
            return k.covered_by(candidate);
        });
        if (!dominated) kept.push_back(candidate);
    }
    bag = LayoutBag(kept.begin(), kept.end());
}

class Engine {
public:
    Engine(const SignaturePolicy& policy, const LayoutOptions& options)
        : policy_(policy), options_(options) {}

    LayoutBag layouts_of(const PolicyNode& node, const std::string& path) {
        if (node.is_leaf()) {
            Layout l;
            l.quantities[group_id(policy_.principals[node.principal_index])] = 1;
            return LayoutBag{l};
        }
        const std::uint32_t n = node.threshold;
        // partial[k]: layouts drawn from exactly k of the children seen so far.
        std::vector<LayoutBag> partial(n + 1);
        partial[0].insert(Layout{});
        for (std::size_t i = 0; i < node.children.size(); ++i) {
            const LayoutBag child = layouts_of(node.children[i], path + "/" + std::to_string(i));
            for (std::uint32_t k = n; k-- > 0;) {
                for (const auto& base : partial[k])
                    for (const auto& option : child) {
                        partial[k + 1].insert(combine(base, option));
                        check_cap(partial, path);
                    }
                if (options_.prune_dominated) minimize(partial[k + 1]);
            }
            // Partials that can no longer reach n with the remaining children are dead.
            const std::size_t remaining = node.children.size() - i - 1;
            for (std::uint32_t k = 0; k + remaining < n; ++k) partial[k].clear();
        }
        return std::move(partial[n]);
    }

private:
    void check_cap(const std::vector<LayoutBag>& partial, const std::string& path) const {
        std::size_t working = 0;
        for (const auto& bag : partial) working += bag.size();
        if (working > options_.cap)
            throw Error(Errc::layout_explosion,
                        "layout working set exceeds cap " + std::to_string(options_.cap) +
                            " at vertex " + path);
    }

    const SignaturePolicy& policy_;
    const LayoutOptions& options_;
};

}  // namespace

LayoutSet compute_layouts(const SignaturePolicy& policy, const LayoutOptions& options) {
    validate_policy(policy);
    if (options.cap < 1) throw Error(Errc::layout_explosion, "layout cap must be at least 1");
    LayoutBag bag = Engine(policy, options).layouts_of(policy.root, "root");
    if (options.prune_dominated) minimize(bag);
    LayoutSet out;
    out.layouts.assign(bag.begin(), bag.end());
    out.source_policy_digest = crypto::sha256(to_json(policy).dump());
    return out;
}

std::vector<Layout> prune_dominated(std::vector<Layout> layouts) {
    LayoutBag bag(std::make_move_iterator(layouts.begin()), std::make_move_iterator(layouts.end()));
    minimize(bag);
    return {bag.begin(), bag.end()};
}

// ---------------------------------------------------------------------------
// Oracle: enumerate every subset of leaves, keep those whose per-group leaf
// counts fit inside the multiset, and evaluate the threshold tree directly.

namespace {

void collect_leaf_groups(const SignaturePolicy& policy, const PolicyNode& node,
                         std::vector<std::string>& out) {
    if (node.is_leaf()) {
        out.push_back(group_id(policy.principals[node.principal_index]));
        return;
    }
    for (const auto& c : node.children) collect_leaf_groups(policy, c, out);
}

bool tree_true(const PolicyNode& node, std::uint32_t chosen, std::size_t& next_leaf) {
    if (node.is_leaf()) return (chosen >> next_leaf++) & 1U;
    std::uint32_t satisfied = 0;
    for (const auto& c : node.children)
        if (tree_true(c, chosen, next_leaf)) ++satisfied;
    return satisfied >= node.threshold;
}

}  // namespace

bool oracle_satisfies(const SignaturePolicy& policy,
                      const std::map<std::string, std::uint32_t>& multiset) {
    std::uint64_t units = 0;
    for (const auto& [g, c] : multiset) units += c;
    if (units > kOracleMaxUnits)
        throw Error(Errc::oracle_too_large, "oracle limited to " +
                                                std::to_string(kOracleMaxUnits) + " units");
    std::vector<std::string> leaves;
    collect_leaf_groups(policy, policy.root, leaves);
    if (leaves.size() > kOracleMaxLeaves)
        throw Error(Errc::oracle_too_large, "oracle limited to " +
                                                std::to_string(kOracleMaxLeaves) + " leaves");

    const std::uint32_t limit = 1U << leaves.size();
    for (std::uint32_t chosen = 0; chosen < limit; ++chosen) {
        std::map<std::string, std::uint32_t> used;
        bool fits = true;
        for (std::size_t i = 0; i < leaves.size() && fits; ++i) {
            if (!((chosen >> i) & 1U)) continue;
            const auto it = multiset.find(leaves[i]);
            fits = it != multiset.end() && ++used[leaves[i]] <= it->second;
        }
        if (!fits) continue;
        std::size_t cursor = 0;
        if (tree_true(policy.root, chosen, cursor)) return true;
    }
    return false;
}

nlohmann::json to_json(const Layout& layout) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [group, count] : layout.quantities)
        out.push_back({{"group", group}, {"quantity", count}});
    return out;
}

Layout layout_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw Error(Errc::schema_error, "layout must be an array");
    Layout layout;
    for (const auto& entry : j) {
        if (!entry.is_object() || !entry.contains("group") || !entry["group"].is_string() ||
            !entry.contains("quantity") || !is_non_negative_integer(entry["quantity"]))
            throw Error(Errc::schema_error, "layout entry needs 'group' and positive 'quantity'");
        const auto q = entry["quantity"].get<std::uint64_t>();
        if (q < 1 || q > 0xffffffffULL)
            throw Error(Errc::schema_error, "layout quantity must be positive");
        layout.quantities[entry["group"].get<std::string>()] += static_cast<std::uint32_t>(q);
    }
    if (layout.quantities.empty()) throw Error(Errc::schema_error, "layout must be non-empty");
    return layout;
}

}  // namespace discovery
