#pragma once

#include <cstdint>
#include <random>

namespace flexamg {

/// Seeded generator with portable helpers.
///
/// std::mt19937_64 and std::seed_seq have output fixed by the standard; the
/// standard distributions do not, so bounded integers and unit reals are
/// derived from raw engine output here. split() derives an independent stream
/// from (seed, stream id) so results never depend on evaluation order.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0)
        : seed_(seed)
        , stream_(stream)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        engine_.seed(seq);
    }

    [[nodiscard]] Rng split(std::uint64_t child) const
    {
        return Rng(seed_, stream_ * 0x9E3779B97F4A7C15ULL + child + 1);
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t index(std::uint64_t n)
    {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do v = engine_();
        while (v >= limit);
        return v % n;
    }

    /// Uniform real in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform real in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

} // namespace flexamg
