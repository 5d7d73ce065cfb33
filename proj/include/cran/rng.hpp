#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace cran {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Hash of (seed, indices...) used as the key of an independent stream.
inline std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> indices) {
    std::uint64_t k = splitmix64(seed ^ 0x6A09E667F3BCC908ull);
    for (std::uint64_t i : indices) k = splitmix64(k ^ splitmix64(i + 0x3C6EF372FE94F82Bull));
    return k;
}

// Counter-based stream: draw n of the stream keyed by `key` depends only on
// (key, n), so results never depend on the order other streams are consumed.
class Stream {
public:
    explicit Stream(std::uint64_t key) : key_(key) {}
    Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> indices)
        : key_(derive_key(seed, indices)) {}

    std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

    // Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() {
        constexpr double two_pi = 6.283185307179586477;
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double exponential() { return -std::log(uniform()); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace cran
