#include "discovery/matching.hpp"

#include <map>

namespace discovery {

namespace {

// Kuhn's augmenting-path matching from demand slots to candidates.
class SlotMatcher {
public:
    explicit SlotMatcher(const std::set<std::string>& excluded) : excluded_(excluded) {}

    // Adds one slot for `demand` and tries to match it; false if impossible.
    bool add_slot(const GroupDemand& demand) {
        slots_.push_back(&demand);
        std::set<std::string> visited;
        return augment(slots_.size() - 1, visited);
    }

private:
    bool augment(std::size_t slot, std::set<std::string>& visited) {
        for (const auto& cand : slots_[slot]->candidates) {
            if (excluded_.count(cand) || !visited.insert(cand).second) continue;
            const auto it = owner_.find(cand);
            if (it == owner_.end() || augment(it->second, visited)) {
                owner_[cand] = slot;
                return true;
            }
        }
        return false;
    }

    const std::set<std::string>& excluded_;
    std::vector<const GroupDemand*> slots_;
    std::map<std::string, std::size_t> owner_;
};

}  // namespace

std::optional<std::string> first_unfillable(const std::vector<GroupDemand>& demands,
                                            const std::set<std::string>& excluded) {
    SlotMatcher matcher(excluded);
    for (const auto& demand : demands)
        for (std::uint32_t i = 0; i < demand.quantity; ++i)
            if (!matcher.add_slot(demand)) return demand.group;
    return std::nullopt;
}

}  // namespace discovery
