#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mmal {

// SplitMix64 finalizer. Used for seed derivation and counter-based masks so
// that results never depend on how work is sliced across threads.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_mix(std::uint64_t seed, std::uint64_t salt) {
    return splitmix64(seed ^ splitmix64(salt));
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Deterministic sub-seed: base seed -> named stream -> index within stream.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                           std::uint64_t index = 0) {
    return hash_mix(hash_mix(base, fnv1a64(tag)), index);
}

// Uniform double in [0,1) from a single hash. Counter-based dropout/moddrop
// masks are built from this so the draw for element i is a pure function of
// (seed, i).
inline double unit_from_hash(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(hash_mix(seed, counter) >> 11) * 0x1.0p-53;
}

// mt19937_64 is bit-exact across platforms; the standard distributions are
// not, so draws go through the explicit helpers below.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    bool bernoulli(double p) { return unit() < p; }

    // Unbiased integer in [0, n) via rejection sampling.
    std::uint64_t index(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return x % n;
    }

  private:
    std::mt19937_64 gen_;
};

} // namespace mmal
