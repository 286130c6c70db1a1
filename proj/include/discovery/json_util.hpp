#pragma once

#include <cstdint>

#include "json.hpp"

namespace discovery {

/// Accepts both unsigned and non-negative signed JSON integers; values built
/// in code are usually signed, values parsed from text are unsigned.
inline bool is_non_negative_integer(const nlohmann::json& j) {
    return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

}  // namespace discovery
