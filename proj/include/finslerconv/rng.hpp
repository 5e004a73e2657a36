#pragma once

#include <cmath>
#include <cstdint>

namespace finslerconv {

// Counter-based generator: the SplitMix64 output function evaluated at
// seed + (index+1) * golden gamma. Stateless, so draws are addressable by
// index and reproducible regardless of evaluation order or thread count.
inline std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Uniform in [0,1), 53-bit mantissa.
inline double uniform01_at(std::uint64_t seed, std::uint64_t index) {
    return static_cast<double>(splitmix64_at(seed, index) >> 11) * 0x1.0p-53;
}

// Uniform in (0,1]; safe as a log argument.
inline double uniform01_open_at(std::uint64_t seed, std::uint64_t index) {
    return static_cast<double>((splitmix64_at(seed, index) >> 11) + 1) * 0x1.0p-53;
}

// Standard normal via Box-Muller; draw i consumes uniforms 2i and 2i+1.
inline double normal_at(std::uint64_t seed, std::uint64_t index) {
    const double u1 = uniform01_open_at(seed, 2 * index);
    const double u2 = uniform01_at(seed, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Sequential convenience wrapper over the counter generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    double uniform01() { return uniform01_at(seed_, next_++); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    double normal() {
        const std::uint64_t i = next_;
        next_ += 2;
        const double u1 = uniform01_open_at(seed_, i);
        const double u2 = uniform01_at(seed_, i + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    std::uint64_t integer() { return splitmix64_at(seed_, next_++); }

private:
    std::uint64_t seed_;
    std::uint64_t next_{0};
};

}  // namespace finslerconv
