#include "discovery/selection.hpp"

#include <algorithm>

#include "discovery/matching.hpp"
#include "discovery/policy.hpp"
#include "discovery/rng.hpp"

namespace discovery {

PeerChoice peer_choice_from_string(std::string_view text) {
    if (text == "random") return PeerChoice::random;
    if (text == "height" || text == "prefer_height") return PeerChoice::prefer_height;
    if (text == "exclude" || text == "exclude_then_random") return PeerChoice::exclude_then_random;
    throw Error(Errc::invalid_query, "unknown peer strategy '" + std::string(text) + "'");
}

LayoutChoice layout_choice_from_string(std::string_view text) {
    if (text == "first") return LayoutChoice::first;
    if (text == "fewest" || text == "fewest_peers") return LayoutChoice::fewest_peers;
    if (text == "random") return LayoutChoice::random;
    throw Error(Errc::invalid_query, "unknown layout choice '" + std::string(text) + "'");
}

std::string_view to_string(PeerChoice choice) {
    switch (choice) {
        case PeerChoice::random: return "random";
        case PeerChoice::prefer_height: return "prefer_height";
        case PeerChoice::exclude_then_random: return "exclude_then_random";
    }
    return "random";
}

std::string_view to_string(LayoutChoice choice) {
    switch (choice) {
        case LayoutChoice::first: return "first";
        case LayoutChoice::fewest_peers: return "fewest_peers";
        case LayoutChoice::random: return "random";
    }
    return "first";
}

namespace {

std::size_t choose_layout(const std::vector<Layout>& layouts, LayoutChoice choice, SplitMix64& rng) {
    switch (choice) {
        case LayoutChoice::first: return 0;
        case LayoutChoice::fewest_peers: {
            std::size_t best = 0;
            for (std::size_t i = 1; i < layouts.size(); ++i)
                if (layouts[i].total() < layouts[best].total() ||
                    (layouts[i].total() == layouts[best].total() &&
                     canonical_less(layouts[i], layouts[best])))
                    best = i;
            return best;
        }
        case LayoutChoice::random: return static_cast<std::size_t>(rng.below(layouts.size()));
    }
    return 0;
}

}  // namespace

SelectionResult select_endorsers(const EndorsementDescriptor& descriptor,
                                 const SelectionStrategy& strategy, std::uint64_t seed) {
    if (descriptor.layouts.empty())
        throw Error(Errc::no_satisfiable_layout,
                    "descriptor for '" + descriptor.chaincode + "' has no layouts");
    SplitMix64 rng(seed);
    const Layout& layout = descriptor.layouts[choose_layout(descriptor.layouts, strategy.layout, rng)];

    std::map<std::string, const PeerInfo*> by_id;
    std::vector<GroupDemand> demands;
    for (const auto& [group, quantity] : layout.quantities) {
        SplitMix64 group_rng = rng.split();
        std::vector<const PeerInfo*> pool;
        if (const auto it = descriptor.endorsers_by_groups.find(group);
            it != descriptor.endorsers_by_groups.end())
            for (const auto& p : it->second) {
                if (strategy.peers == PeerChoice::exclude_then_random && strategy.deny.count(p.peer_id))
                    continue;
                pool.push_back(&p);
                by_id.emplace(p.peer_id, &p);
            }
        std::sort(pool.begin(), pool.end(),
                  [](const PeerInfo* a, const PeerInfo* b) { return a->peer_id < b->peer_id; });
        group_rng.shuffle(pool);
        if (strategy.peers == PeerChoice::prefer_height)
            std::stable_sort(pool.begin(), pool.end(), [](const PeerInfo* a, const PeerInfo* b) {
                return a->ledger_height > b->ledger_height;
            });
        GroupDemand demand{group, quantity, {}};
        for (const auto* p : pool) demand.candidates.push_back(p->peer_id);
        demands.push_back(std::move(demand));
    }

    if (const auto failing = first_unfillable(demands))
        throw Error(Errc::insufficient_peers, "insufficient peers for group " + *failing);

    SelectionResult result;
    result.layout_used = layout;
    result.seed_used = seed;
    std::set<std::string> taken;
    for (std::size_t gi = 0; gi < demands.size(); ++gi) {
        GroupDemand& current = demands[gi];
        auto& chosen = result.assignment[current.group];
        for (const auto& candidate : current.candidates) {
            if (chosen.size() == current.quantity) break;
            if (taken.count(candidate)) continue;
            std::vector<GroupDemand> rest(demands.begin() + static_cast<std::ptrdiff_t>(gi),
                                          demands.end());
            rest.front().quantity = current.quantity - static_cast<std::uint32_t>(chosen.size()) - 1;
            taken.insert(candidate);
            if (jointly_fillable(rest, taken)) {
                chosen.push_back(candidate);
            } else {
                taken.erase(candidate);
            }
        }
        if (chosen.size() < current.quantity)
            throw Error(Errc::insufficient_peers, "insufficient peers for group " + current.group);
    }
    for (const auto& id : taken) result.peers.push_back(*by_id.at(id));
    return result;
}

bool check_consistency(std::span<const Endorsement> responses) {
    if (responses.empty()) throw Error(Errc::empty_response_set, "no endorsement responses");
    return std::all_of(responses.begin(), responses.end(), [&](const Endorsement& e) {
        return e.payload_digest == responses.front().payload_digest;
    });
}

bool validate_endorsement_set(const SignaturePolicy& policy, std::span<const Endorsement> responses,
                              const Bytes& payload_digest) {
    return evaluate(policy, responses, payload_digest);
}

nlohmann::json to_json(const SelectionResult& result) {
    nlohmann::json peers = nlohmann::json::array();
    for (const auto& p : result.peers) peers.push_back(peer_to_json(p));
    return {{"peers", std::move(peers)},
            {"assignment", result.assignment},
            {"layout_used", to_json(result.layout_used)},
            {"seed_used", result.seed_used}};
}

}  // namespace discovery
