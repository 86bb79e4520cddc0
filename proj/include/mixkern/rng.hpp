#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace mixkern::rng {

inline uint64_t splitmix64_next(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// xoshiro256++ with splitmix64 seeding. Streams derived from (seed, stream_id)
// are independent of thread scheduling, which is what makes per-column and
// per-trial sampling bit-reproducible under any thread count.
class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(uint64_t seed) {
        for (auto& word : state_) word = splitmix64_next(seed);
    }

    static Xoshiro256pp for_stream(uint64_t seed, uint64_t stream_id) {
        uint64_t s = seed;
        uint64_t h = splitmix64_next(s);
        return Xoshiro256pp(h ^ (stream_id * 0xD2B74407B1CE6E93ULL + 0x8CB92BA72F3D8DD7ULL));
    }

    uint64_t next() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // uniform on (0, 1], safe as a log argument
    double uniform_pos() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

    // standard normal via Box-Muller, second draw cached
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        cached_ = radius * std::sin(angle);
        has_cached_ = true;
        return radius * std::cos(angle);
    }

    double rademacher() { return (next() >> 63) ? 1.0 : -1.0; }

    // Student-t with df degrees of freedom, standardized to unit variance
    double student_t_unit(int df) {
        const double z = normal();
        double chi2 = 0.0;
        for (int k = 0; k < df; ++k) {
            const double g = normal();
            chi2 += g * g;
        }
        const double t = z / std::sqrt(chi2 / static_cast<double>(df));
        return t * std::sqrt(static_cast<double>(df - 2) / static_cast<double>(df));
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> state_{};
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace mixkern::rng
