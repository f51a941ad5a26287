#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_set>
#include <vector>

namespace kgec {

struct Triple {
    int head = 0;
    int relation = 0;
    int tail = 0;

    bool operator==(const Triple&) const = default;
};

struct TripleHash {
    size_t operator()(const Triple& t) const {
        uint64_t x = (static_cast<uint64_t>(static_cast<uint32_t>(t.head)) << 42) ^
                     (static_cast<uint64_t>(static_cast<uint32_t>(t.relation)) << 21) ^
                     static_cast<uint64_t>(static_cast<uint32_t>(t.tail));
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return static_cast<size_t>(x ^ (x >> 31));
    }
};

using TripleSet = std::vector<Triple>;
using TripleIndex = std::unordered_set<Triple, TripleHash>;

inline TripleIndex make_index(const TripleSet& triples) {
    TripleIndex idx;
    idx.reserve(triples.size() * 2);
    for (const Triple& t : triples) idx.insert(t);
    return idx;
}

} // namespace kgec
