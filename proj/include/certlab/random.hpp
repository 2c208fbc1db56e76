#pragma once

// Seeded randomness helpers.  Every stochastic routine takes an explicit
// 64-bit seed; per-trial seeds are derived with splitmix64 so that trials are
// independent of execution order and thread count.

#include <cstdint>
#include <random>

#include "certlab/linalg.hpp"

namespace certlab {

// splitmix64 step — standard finalizer, used to decorrelate derived seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic per-trial seed: mix the experiment seed with the trial index.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial) {
    return splitmix64(seed ^ splitmix64(trial + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

    // Uniform integer in [0, n).
    std::uint64_t index(std::uint64_t n) {
        std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
        return d(engine_);
    }

    double sign() { return uniform_(engine_) < 0.5 ? -1.0 : 1.0; }

    Vector normal_vector(int n) {
        Vector v(n);
        for (double& x : v) x = normal();
        return v;
    }

    DenseMatrix normal_matrix(int rows, int cols) {
        DenseMatrix m(rows, cols);
        for (double& x : m.data()) x = normal();
        return m;
    }

    // k distinct indices from [0, n), in selection order.
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> pool(n);
        for (int i = 0; i < n; ++i) pool[i] = i;
        std::vector<int> out;
        out.reserve(k);
        for (int i = 0; i < k; ++i) {
            const std::uint64_t j = i + index(static_cast<std::uint64_t>(n - i));
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
        return out;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace certlab
