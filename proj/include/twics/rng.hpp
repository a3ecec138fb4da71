#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "twics/stats.hpp"

namespace twics {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Derives an independent substream seed from (base, stream). Replication r
// runs on derive_seed(master_seed, r), and each stage inside a replication
// derives again with its own stream index, so serial and parallel executions
// consume identical draws.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base ^ (0xD1B54A32D192ED03ull * (stream + 1));
    const std::uint64_t a = splitmix64(s);
    const std::uint64_t b = splitmix64(s);
    return a ^ (b << 1) ^ (b >> 63);
}

// Seeded generator wrapping the (fully specified) mt19937_64 engine. All
// variate transforms are implemented here rather than with <random>
// distributions, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0,1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Inverse-CDF sampling; uniform01() never returns 1 so the quantile is finite,
    // and 0 maps to -inf only with probability 2^-53 per draw, guarded below.
    double normal() {
        double u = uniform01();
        if (u <= 0.0) u = 0x1.0p-53;
        return normal_quantile(u);
    }

    double normal(double mu, double sd) { return mu + sd * normal(); }

    // Uniform integer in [0, n); n > 0. Multiply-shift rejection (unbiased).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t threshold = (0ull - n) % n;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Uniform random subset of size k, order preserved from the input.
    template <class T>
    std::vector<T> sample_without_replacement(const std::vector<T>& pool, std::size_t k) {
        std::vector<std::size_t> idx(pool.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        shuffle(idx);
        idx.resize(k);
        std::sort(idx.begin(), idx.end());
        std::vector<T> out;
        out.reserve(k);
        for (std::size_t i : idx) out.push_back(pool[i]);
        return out;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace twics
