#pragma once

#include <cstdint>
#include <span>

namespace bpo {

// xoshiro256** seeded through splitmix64. Self-contained so that streams are
// reproducible across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0,1).
    double next_double();
    // Uniform in (0,1), safe as a log() argument.
    double next_open();

    double uniform(double lo, double hi);
    // Uniform integer in [0,n). n must be >= 1.
    std::uint64_t uniform_int(std::uint64_t n);
    double exponential(double rate);
    double normal(double mean, double stddev);
    // Index sampled proportionally to non-negative weights.
    std::size_t pick_weighted(std::span<const double> weights);

    // Independent stream derived from this stream's seed and a label.
    Rng fork(std::uint64_t label) const;

    // Stateless derivation used for common-random-numbers sampling keyed by
    // (case, node, visit) tuples.
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

private:
    std::uint64_t state_[4];
    std::uint64_t seed_;
};

} // namespace bpo
