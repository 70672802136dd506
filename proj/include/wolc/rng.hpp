#ifndef WOLC_RNG_HPP
#define WOLC_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace wolc {

/// Deterministic random source with platform-independent output.
///
/// std::mt19937_64 produces an identical stream on every conforming
/// implementation, but the standard distributions (uniform_int_distribution,
/// shuffle, ...) do not.  This wrapper therefore implements its own bounded
/// draws and shuffling so that seeded results are byte-identical across
/// compilers and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Raw 64-bit draw.
    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, bound) via rejection sampling; bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        // Rejection on the top of the range keeps the draw exactly uniform.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t value;
        do {
            value = engine_();
        } while (value >= limit);
        return value % bound;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Fisher-Yates shuffle (deterministic replacement for std::shuffle).
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    /// A random permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        shuffle(order);
        return order;
    }

private:
    std::mt19937_64 engine_;
};

/// Mixes a base seed with stream identifiers so that nested components
/// (per-iteration, per-column, per-fold) get independent, reproducible
/// substreams.  Uses the splitmix64 finalizer, which is a bijection on
/// 64-bit words.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(base ^ mix(a + 1) ^ mix((b + 1) << 1));
}

} // namespace wolc

#endif // WOLC_RNG_HPP
