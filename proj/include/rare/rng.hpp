#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace rare::rng {

/// mt19937_64 with hand-rolled bounded draws. std::uniform_int_distribution
/// is implementation-defined, so artifacts would not be byte-identical
/// across standard libraries; rejection sampling keeps runs reproducible.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, n), n > 0.
    uint64_t below(uint64_t n) {
        uint64_t threshold = (~n + 1) % n; // 2^64 mod n
        for (;;) {
            uint64_t r = gen_();
            if (r >= threshold) return r % n;
        }
    }

    /// Uniform in [lo, hi] inclusive.
    int64_t between(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    double unit() { // [0, 1)
        return static_cast<double>(gen_() >> 11) * (1.0 / 9007199254740992.0);
    }

    bool chance(double p) { return unit() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// First k of a seeded shuffle; order of the sample is the draw order.
    template <typename T>
    std::vector<T> sample(const std::vector<T>& v, size_t k) {
        std::vector<T> pool = v;
        shuffle(pool);
        if (k < pool.size()) pool.resize(k);
        return pool;
    }

private:
    std::mt19937_64 gen_;
};

} // namespace rare::rng
