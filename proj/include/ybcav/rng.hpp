#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ybcav::rng {

/// splitmix64 step; the usual stateless mixer for seed material.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view text);

/// Child seed for stream `tag` / `index`, derived deterministically from the
/// master seed. Different tags and indices give statistically independent
/// streams regardless of scheduling.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view tag,
                          std::uint64_t index = 0);

/// mt19937_64 engine with hand-coded variate transforms so that sampled
/// values depend only on the seed, not on the standard library's
/// distribution implementations.
class Generator {
  public:
    explicit Generator(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1], safe as a log() argument.
    double uniform_positive() {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (pairs cached).
    double normal();

    /// Exponential waiting time with the given rate (rate > 0).
    double exponential(double rate);

    /// Poisson count; exact for any mean >= 0.
    long poisson(double mean);

  private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool have_cached_ = false;
};

} // namespace ybcav::rng
