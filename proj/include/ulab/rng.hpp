#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ulab {

// Seeded RNG with hand-rolled double/normal derivation so that streams are
// reproducible across standard library implementations (std::*_distribution
// is not pinned by the standard).
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) {
        // Rejection sampling keeps the distribution exact.
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Deterministic seed derivation for substreams (per example, per attempt, ...).
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t x = a + 0x9e3779b97f4a7c15ULL + (b << 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

}  // namespace ulab
