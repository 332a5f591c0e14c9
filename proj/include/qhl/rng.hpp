#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace qhl {

// Counter-based stream derivation: every random stream is keyed by the run
// seed plus a chain of component ids (round, circuit, replica, ...), so the
// same stream is produced no matter which thread or in which order a task
// runs. The mixer is SplitMix64, which is a bijective avalanche function.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RngStream {
public:
    explicit RngStream(uint64_t key) : engine_(splitmix64(key)) {}

    // Derive a stream from (seed, id...) without ordering sensitivity.
    static RngStream keyed(uint64_t seed, std::initializer_list<uint64_t> ids) {
        uint64_t k = splitmix64(seed);
        for (uint64_t id : ids) k = splitmix64(k ^ (0x6a09e667f3bcc909ULL + id));
        return RngStream(k);
    }

    std::mt19937_64& engine() { return engine_; }

    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    uint64_t binomial(uint64_t n, double p) {
        if (p <= 0.0 || n == 0) return 0;
        if (p >= 1.0) return n;
        return std::binomial_distribution<uint64_t>(n, p)(engine_);
    }

    // Multinomial draw by sequential binomial decomposition. O(#categories).
    std::vector<uint64_t> multinomial(uint64_t n, const std::vector<double>& p) {
        std::vector<uint64_t> counts(p.size(), 0);
        double remaining = 1.0;
        uint64_t left = n;
        for (size_t i = 0; i + 1 < p.size() && left > 0; ++i) {
            double cond = remaining > 0 ? p[i] / remaining : 0.0;
            uint64_t c = binomial(left, cond);
            counts[i] = c;
            left -= c;
            remaining -= p[i];
        }
        if (!p.empty()) counts.back() += left;
        return counts;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace qhl
