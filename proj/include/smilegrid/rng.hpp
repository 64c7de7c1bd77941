#pragma once

#include <cstdint>

#include "smilegrid/normal.hpp"

namespace smilegrid {

// Stateless counter-based generator built on the splitmix64 finalizer. The
// value for a given (seed, counter) pair does not depend on call order, so
// parallel workers can consume disjoint counter ranges deterministically.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t bits(std::uint64_t counter) const {
        std::uint64_t z = seed_ + (counter + 1) * 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on the open interval (0, 1).
    double uniform(std::uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1p-53;
    }

    // Standard normal draw via inverse transform.
    double normal(std::uint64_t counter) const { return inverse_normal_cdf(uniform(counter)); }

    // Decorrelated stream for a work item (coupon, smile, ...).
    CounterRng substream(std::uint64_t index) const {
        return CounterRng(bits(0x53545245414dULL + index));
    }

private:
    std::uint64_t seed_;
};

} // namespace smilegrid
