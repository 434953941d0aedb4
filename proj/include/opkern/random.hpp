#pragma once

#include <cstdint>

namespace opkern {

/// Counter-based standard normal variates.
///
/// The value at (seed, stream, index) is a pure function of those three integers, so any
/// subset of variates can be produced in any order or on any thread with identical results.
/// Variates 2j and 2j+1 of a stream are the Box-Muller pair built from two hashed uniforms.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    double operator()(std::uint64_t index) const;

    /// Uniform on (0, 1] at the given counter.
    double uniform(std::uint64_t counter) const;

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace opkern
