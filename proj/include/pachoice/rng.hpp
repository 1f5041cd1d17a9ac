#pragma once

#include <cstdint>
#include <random>

namespace pachoice {

/// Engine used by every run. One engine per run, never shared.
using rng_engine = std::mt19937_64;

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of stream `stream` under master seed `master`. Streams are
/// independent of the order in which they are created.
constexpr std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return splitmix64_mix(master ^ splitmix64_mix(stream + 0x632BE59BD9B4E019ULL));
}

inline rng_engine make_stream(std::uint64_t master, std::uint64_t stream) {
    return rng_engine{derive_stream_seed(master, stream)};
}

// The helpers below avoid std::uniform_*_distribution so that a seed produces
// the same draws under every standard library.

/// Uniform on [0, 1) with 53 random bits.
template <class Rng>
double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on the open interval (0, 1).
template <class Rng>
double uniform_open01(Rng& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform integer in [0, n), n > 0 (Lemire's multiply-and-reject).
template <class Rng>
std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    unsigned __int128 product = static_cast<unsigned __int128>(rng()) * n;
    auto low = static_cast<std::uint64_t>(product);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            product = static_cast<unsigned __int128>(rng()) * n;
            low = static_cast<std::uint64_t>(product);
        }
    }
    return static_cast<std::uint64_t>(product >> 64);
}

} // namespace pachoice
