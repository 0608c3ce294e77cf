#pragma once
// Seeded random streams. One master seed derives independent named
// sub-streams (env, policy, pso, buffer) so reruns reproduce every draw.
//
// Splitting rule: sub-seed = splitmix64(master_seed ^ fnv1a64(name)).
// All draws go through explicit bit-level conversions, never through
// std::uniform_*_distribution, so streams are identical on every platform.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace covplan {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n), unbiased via rejection
    uint64_t uniform_index(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        uint64_t x;
        do {
            x = next_u64();
        } while (x < threshold);
        return x % n;
    }

    // Standard normal, Box-Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // avoid log(0)
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(kTwoPi * u2);
        has_spare_ = true;
        return mag * std::cos(kTwoPi * u2);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline Rng named_stream(uint64_t master_seed, std::string_view name) {
    return Rng(splitmix64(master_seed ^ fnv1a64(name)));
}

// The four streams a training run consumes.
struct RngSet {
    Rng env;
    Rng policy;
    Rng pso;
    Rng buffer;

    static RngSet from_master(uint64_t master_seed) {
        return RngSet{named_stream(master_seed, "env"), named_stream(master_seed, "policy"),
                      named_stream(master_seed, "pso"), named_stream(master_seed, "buffer")};
    }
};

}  // namespace covplan
