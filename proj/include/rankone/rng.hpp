#pragma once

#include <cstdint>

namespace rankone::rng {

/// splitmix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based draw: a pure function of (seed, trajectory, step, sub), so
/// any draw of any trajectory can be reproduced without replaying the stream.
constexpr std::uint64_t draw(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step,
                             std::uint64_t sub = 0) noexcept {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ trajectory);
    h = splitmix64(h ^ step);
    return splitmix64(h ^ sub);
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

} // namespace rankone::rng
