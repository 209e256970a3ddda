#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rlaif {

// Deterministic random source. std::mt19937_64 itself is specified exactly by
// the standard; the distribution adapters are not, so we roll our own here.
// Everything downstream (sampling, shuffles, bootstrap) goes through this
// class so that a fixed seed yields identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Unbiased integer in [0, n). Rejection sampling on the top of the range.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t threshold = (~std::uint64_t{0} - n + 1) % n;
        for (;;) {
            const std::uint64_t x = engine_();
            if (x >= threshold) return x % n;
        }
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Box-Muller, no cached spare so the stream stays position-independent.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform_double();
        while (u1 <= 0.0) u1 = uniform_double();
        const double u2 = uniform_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// Stable seed derivation for per-item streams (pool builders, per-turn
// sampling). splitmix64 finalizer over the combined words.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(base) ^ a) ^ b);
}

// FNV-1a over bytes, used to derive seeds from string ids.
inline std::uint64_t hash_string(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace rlaif
