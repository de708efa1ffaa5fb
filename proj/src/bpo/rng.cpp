#include "bpo/rng.hpp"

#include <cmath>

namespace bpo {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_open() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
    // Rejection to avoid modulo bias.
    const std::uint64_t limit = ~0ull - ~0ull % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
}

double Rng::exponential(double rate) {
    return -std::log(next_open()) / rate;
}

double Rng::normal(double mean, double stddev) {
    const double u1 = next_open();
    const double u2 = next_double();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    return mean + stddev * z;
}

std::size_t Rng::pick_weighted(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double x = next_double() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        x -= weights[i];
        if (x < 0.0) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
}

Rng Rng::fork(std::uint64_t label) const {
    return Rng(mix(seed_, label));
}

std::uint64_t Rng::mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    return splitmix64(x);
}

} // namespace bpo
