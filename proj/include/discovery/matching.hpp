#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace discovery {

/// A group that needs `quantity` distinct members picked from `candidates`.
struct GroupDemand {
    std::string group;
    std::uint32_t quantity = 0;
    std::vector<std::string> candidates;
};

/// Checks whether every demand can be met at once with no candidate used
/// twice (bipartite b-matching). On failure returns the first demand, in the
/// given order, at which the prefix of demands becomes infeasible.
std::optional<std::string> first_unfillable(const std::vector<GroupDemand>& demands,
                                            const std::set<std::string>& excluded = {});

inline bool jointly_fillable(const std::vector<GroupDemand>& demands,
                             const std::set<std::string>& excluded = {}) {
    return !first_unfillable(demands, excluded).has_value();
}

}  // namespace discovery
