#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cac {

/// Name recorded in run manifests.
inline constexpr const char* kRngAlgorithm =
    "mt19937_64 per stream, seeded by splitmix64(seed, replication, stream)";

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replication,
                                 std::uint64_t stream) {
    return splitmix64(splitmix64(splitmix64(seed) ^ replication) ^ stream);
}

/// One independent random stream. Variates come straight from raw engine
/// output, not from <random> distributions.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

private:
    std::mt19937_64 engine_;
};

}  // namespace cac
