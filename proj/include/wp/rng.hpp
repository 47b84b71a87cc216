#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace wp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based seed fan-out: substream (tag, index) of a master seed.
// Adding trials never reshuffles earlier ones, and distinct tags give
// unrelated streams for the same index.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
    return splitmix64(splitmix64(master ^ (tag * 0xd1342543de82ef95ULL)) + index);
}

// Stream tags used across the toolkit.
namespace stream {
inline constexpr std::uint64_t edges = 1;
inline constexpr std::uint64_t messages = 2;
inline constexpr std::uint64_t story = 3;
inline constexpr std::uint64_t vertex = 4;
inline constexpr std::uint64_t matching = 5;
inline constexpr std::uint64_t trial = 6;
}  // namespace stream

// mt19937_64 has a standard-specified output sequence, and all sampling below
// is implemented locally, so streams are reproducible across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1).
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform double in (0, 1].
    double next_unit_pos() { return 1.0 - next_unit(); }

    // Uniform integer in [0, n), n >= 1. Rejection keeps it exactly uniform.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Knuth product method; mean is split into chunks so the exp() never
    // underflows. Fine for the per-vertex means this toolkit uses.
    std::int64_t poisson(double mean) {
        std::int64_t total = 0;
        while (mean > 500.0) {
            total += poisson_small(500.0);
            mean -= 500.0;
        }
        return total + poisson_small(mean);
    }

    // Index sampled from a probability vector by CDF inversion.
    int sample(std::span<const double> weights) {
        const double u = next_unit();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

  private:
    std::int64_t poisson_small(double mean) {
        if (mean <= 0.0) return 0;
        const double threshold = std::exp(-mean);
        std::int64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= next_unit_pos();
        } while (p > threshold);
        return k - 1;
    }

    std::mt19937_64 engine_;
};

}  // namespace wp
