#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace qrcpipe {

// 64-bit FNV-1a, used for config hashes and named RNG substreams.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t seed = 1469598103934665603ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s,
                           std::uint64_t seed = 1469598103934665603ULL) {
    return fnv1a(s.data(), s.size(), seed);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic substream derivation: results do not depend on scheduling
// order as long as every consumer names its stream.
inline std::uint64_t derive_seed(std::uint64_t master, const std::string& stream,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = fnv1a(stream);
    h = fnv1a(&master, sizeof master, h);
    h = fnv1a(&a, sizeof a, h);
    h = fnv1a(&b, sizeof b, h);
    return splitmix64(h);
}

inline std::mt19937_64 make_rng(std::uint64_t master, const std::string& stream,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
    return std::mt19937_64(derive_seed(master, stream, a, b));
}

}  // namespace qrcpipe
