#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace traceguard {

// 64-bit FNV-1a. Used for sub-seed derivation and output fingerprints.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Per-trace sub-seed: fnv1a64 over (master_seed, model_id, ordinal).
// Documented so corpora replicate across implementations.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view tag, std::uint64_t ordinal) {
    std::uint64_t h = fnv1a64_u64(master_seed, 0xcbf29ce484222325ull);
    h = fnv1a64(tag, h);
    h = fnv1a64_u64(ordinal, h);
    return h;
}

// Deterministic random stream: mt19937_64 (bit-exact per the C++ standard)
// with hand-rolled uniform / normal / lognormal draws so results do not
// depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive integer range.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    // Box-Muller; one value per call, no caching, so the stream layout is fixed.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mean + stddev * z;
    }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    // Knuth's method; lambda is small everywhere we use it.
    int poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        double limit = std::exp(-lambda);
        double p = 1.0;
        int k = 0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Index draw from unnormalized weights.
    std::size_t weighted_index(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double r = uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (r < acc) return i;
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 engine_;
};

// mu of a lognormal with the given mean, holding sigma fixed.
inline double lognormal_mu_for_mean(double mean, double sigma) {
    return std::log(mean) - 0.5 * sigma * sigma;
}

}  // namespace traceguard
