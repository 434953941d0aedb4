#include "opkern/random.hpp"

#include <cmath>
#include <numbers>

namespace opkern {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double NormalStream::uniform(std::uint64_t counter) const {
    const std::uint64_t h = mix64(mix64(mix64(seed_) ^ stream_) ^ counter);
    return static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
}

double NormalStream::operator()(std::uint64_t index) const {
    const std::uint64_t pair = index >> 1;
    const double u1 = uniform(2 * pair);
    const double u2 = uniform(2 * pair + 1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return (index & 1) == 0 ? radius * std::cos(angle) : radius * std::sin(angle);
}

}  // namespace opkern
