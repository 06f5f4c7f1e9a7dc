#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mcd {

/// SplitMix64 finaliser; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for the substream identified by a key path under a master seed.
/// Streams keyed by (point, block) are independent of the order they are drawn in.
inline std::uint64_t stream_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys)
{
    std::uint64_t s = mix64(master);
    for (auto k : keys)
        s = mix64(s ^ mix64(k + 0x632be59bd9b4e019ULL));
    return s;
}

using RngStream = std::mt19937_64;

inline RngStream make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> keys)
{
    return RngStream(stream_seed(master, keys));
}

}  // namespace mcd
