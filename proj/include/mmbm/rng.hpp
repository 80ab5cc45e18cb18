#pragma once

#include <cmath>
#include <cstdint>

namespace mmbm {

/// Counter-based 64-bit generator (splitmix64 finalizer over a keyed
/// counter). State is (key, counter); draws are pure functions of both, so
/// streams are reproducible across platforms and safe to hand out per path.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ mix(stream + 0x9E3779B97F4A7C15ull))) {}

    std::uint64_t next_u64() {
        counter_ += 0x9E3779B97F4A7C15ull;
        return mix(key_ ^ counter_);
    }

    /// uniform on (0, 1), never exactly 0 or 1
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_exponential(double rate) { return -std::log(next_uniform()) / rate; }

    /// standard normal via Box-Muller (pairs cached)
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mmbm
