// SPDX-License-Identifier: Apache-2.0
//
// Seed derivation for independent deterministic random streams.

#ifndef RFPLAN_RANDOM_HPP
#define RFPLAN_RANDOM_HPP

#include <cstdint>

namespace rfplan
{

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Seed of stream `index` under a master seed.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index)
{
    return splitmix64(master ^ splitmix64(index));
}

} // namespace rfplan

#endif
