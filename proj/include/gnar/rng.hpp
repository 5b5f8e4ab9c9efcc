#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace gnar {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Child seed for an independent stream (replication, restart, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master ^ (0xd6e8feb86659fd93ULL + (stream << 1));
    splitmix64(s);
    return splitmix64(s);
}

/**
 * Seeded PRNG with hand-rolled distributions.
 *
 * mt19937_64 is bit-exact by the standard, but std:: distributions are
 * implementation-defined, so uniform/normal/integer draws are implemented
 * here. Same seed => same stream on every platform.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1) : eng_(seed) {}

    /// Uniform on [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), unbiased.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// k distinct values from {0,...,n-1}, partial Fisher-Yates order.
    std::vector<int> sample_distinct(int n, int k) {
        if (k > n) throw std::invalid_argument("Rng::sample_distinct: k > n");
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(below(static_cast<std::uint64_t>(n - i)));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k);
        return idx;
    }

    /// Index drawn from the given probability weights (must sum to ~1).
    int categorical(const std::vector<double>& probs) {
        const double u = uniform01();
        double acc = 0.0;
        for (std::size_t g = 0; g < probs.size(); ++g) {
            acc += probs[g];
            if (u < acc) return static_cast<int>(g);
        }
        return static_cast<int>(probs.size()) - 1;
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace gnar
