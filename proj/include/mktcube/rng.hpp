#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mktcube::rng {

/// FNV-1a over the stream name; mixed with the master seed so that every
/// named stream is an independent deterministic generator.
inline std::uint64_t stream_key(std::uint64_t seed, std::string_view name) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

/// All randomness in the project flows from one master seed fanned out by
/// stream name ("data", "init", "shuffle", ...).
inline std::mt19937_64 stream(std::uint64_t seed, std::string_view name) {
    return std::mt19937_64(stream_key(seed, name));
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(g);
}

inline double normal(std::mt19937_64& g, double mean, double stddev) {
    // Explicit Box-Muller keeps draws bit-reproducible across stdlib versions.
    std::uniform_real_distribution<double> d(0.0, 1.0);
    double u1 = d(g);
    double u2 = d(g);
    if (u1 < 1e-300) u1 = 1e-300;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    return mean + stddev * z;
}

} // namespace mktcube::rng
