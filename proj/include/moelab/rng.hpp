#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>

namespace moelab::rng {

// SplitMix64 (Steele, Lea, Flood 2014). Counter-based: the whole stream is a
// pure function of the 64-bit seed, so every draw in this project is
// reproducible from (seed, position) alone.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in the open interval (0,1); never 0, so log() is safe.
    double next_unit() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1p-53;
    }

    // Standard normal via Box-Muller. Caches the second variate.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        double u2 = next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Derive an independent stream seed from a base seed and a stream tag.
// Feeding both through the SplitMix64 output function decorrelates streams
// that differ in either argument.
inline uint64_t derive(uint64_t seed, uint64_t tag) {
    SplitMix64 a(seed);
    SplitMix64 b(tag * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
    SplitMix64 c(a.next() ^ b.next());
    return c.next();
}

inline uint64_t derive(uint64_t seed, uint64_t tag1, uint64_t tag2) {
    return derive(derive(seed, tag1), tag2);
}

} // namespace moelab::rng
