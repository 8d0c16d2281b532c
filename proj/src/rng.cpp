#include "ybcav/rng.hpp"

#include <cmath>

#include "ybcav/units.hpp"

namespace ybcav::rng {

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view tag,
                          std::uint64_t index) {
    std::uint64_t state = master_seed ^ fnv1a(tag);
    splitmix64(state);
    state ^= 0x9e3779b97f4a7c15ULL * (index + 1);
    std::uint64_t out = splitmix64(state);
    // avoid the all-zero mt19937_64 seed edge case
    return out ? out : 0x1234567899abcdefULL;
}

double Generator::normal() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_normal_;
    }
    const double u1 = uniform_positive();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = units::two_pi * u2;
    cached_normal_ = r * std::sin(angle);
    have_cached_ = true;
    return r * std::cos(angle);
}

double Generator::exponential(double rate) {
    return -std::log(uniform_positive()) / rate;
}

long Generator::poisson(double mean) {
    if (mean <= 0.0) return 0;
    // Knuth's product method, chunked so exp() never underflows.
    long total = 0;
    double remaining = mean;
    while (remaining > 0.0) {
        const double chunk = remaining > 500.0 ? 500.0 : remaining;
        remaining -= chunk;
        const double limit = std::exp(-chunk);
        double product = 1.0;
        long count = -1;
        do {
            product *= uniform_positive();
            ++count;
        } while (product > limit);
        total += count;
    }
    return total;
}

} // namespace ybcav::rng
