#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace microdata {

/// SplitMix64 finalizer; full-avalanche 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent child seed for a named stream. Pure function:
/// child = mix64(mix64(master) ^ mix64(stream_id + 1)).
constexpr std::uint64_t seed_split(std::uint64_t master_seed, std::uint64_t stream_id)
{
    return mix64(mix64(master_seed) ^ mix64(stream_id + 1));
}

/// Seeded random source with explicitly specified draw algorithms, so the
/// same seed gives the same stream on every build. Draws are stateless:
/// each call consumes a fixed number of engine outputs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : _gen(seed) {}

    std::uint64_t next_u64() { return _gen(); }

    /// Uniform in [0, 1): top 53 bits of one engine output.
    double uniform01()
    {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via one Box-Muller cosine draw (two engine outputs).
    double normal()
    {
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Uniform index in [0, n). Modulo bias is below 2^-10 only for
    /// n > 2^54; irrelevant for the index ranges used here.
    std::size_t uniform_index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

private:
    std::mt19937_64 _gen;
};

} // namespace microdata
