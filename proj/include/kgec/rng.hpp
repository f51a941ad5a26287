#pragma once

#include <cstdint>
#include <random>

namespace kgec {

using Rng = std::mt19937_64;

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t x = a * 0x9e3779b97f4a7c15ull + b;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Independent substream, so that e.g. negative sampling for positive #i does
// not depend on how many draws earlier positives consumed.
inline Rng substream(uint64_t master, uint64_t a, uint64_t b = 0) {
    return Rng(mix_seed(mix_seed(master, a), b));
}

} // namespace kgec
