#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace segdms {

// splitmix64 finalizer; used to derive independent stream seeds from a
// (global seed, stream index...) tuple so per-sequence work is
// order-independent and reproducible.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed) { return mix64(seed); }

template <class... Rest>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t next, Rest... rest) {
    return derive_seed(mix64(seed ^ mix64(next)), rest...);
}

// mt19937_64 engine with hand-rolled draw helpers. The standard engine is
// bit-specified; the distribution helpers are spelled out here so draws stay
// reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform on [0, 1) with 53-bit resolution
    double next_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform integer on [0, n), n >= 1; rejection sampling to avoid modulo bias
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % n;
    }

    int next_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(next_below(static_cast<std::uint64_t>(hi_inclusive - lo + 1)));
    }

    bool next_bernoulli(double p) { return next_real() < p; }

    // index draw proportional to non-negative weights (CDF inversion)
    int next_categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = next_real() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[next_below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace segdms
