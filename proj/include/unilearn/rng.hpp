#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace unilearn {

/// SplitMix64 finalizer; used to derive independent seed streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for a named sub-stream: folds each component into the base seed
/// with splitmix64, h <- splitmix64(h ^ splitmix64(component)), in order.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t p : parts)
        h = splitmix64(h ^ splitmix64(p));
    return h;
}

/// Seeded generator with platform-independent conversions. The standard
/// distributions are implementation-defined, so uniform reals and bounded
/// integers are derived from raw mt19937_64 output here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), rejection sampled; n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace unilearn
