#pragma once

#include <cstdint>
#include <random>

namespace selinf {

namespace detail {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d9649669d37b2fULL;
    return x ^ (x >> 31);
}

} // namespace detail

// Counter-based stream derivation: the generator for (seed, purpose,
// replication, attempt) is a pure function of those values, so parallel
// schedules cannot change any draw.
enum class StreamPurpose : uint64_t { design = 1, errors = 2, generic = 3 };

inline std::mt19937_64 derive_stream(uint64_t seed, StreamPurpose purpose, uint64_t replication = 0,
                                     uint64_t attempt = 0) {
    uint64_t s = detail::splitmix64(seed);
    s = detail::splitmix64(s ^ static_cast<uint64_t>(purpose));
    s = detail::splitmix64(s ^ replication);
    s = detail::splitmix64(s ^ (attempt * 0x632be59bd9b4e019ULL));
    return std::mt19937_64(s);
}

} // namespace selinf
