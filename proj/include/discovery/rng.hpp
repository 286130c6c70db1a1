#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace discovery {

/// SplitMix64. The full draw procedure (bounded draws and shuffles) is fixed
/// here so that selections reproduce bit-for-bit across builds and languages;
/// std::uniform_int_distribution and std::shuffle are implementation-defined.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, bound) by rejection; bound must be positive.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

    /// Independent child stream seeded from this one.
    SplitMix64 split() { return SplitMix64(next()); }

    /// Fisher-Yates, walking from the back.
    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace discovery
