#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace toeplab {

/// splitmix64 finalizer; used to turn (master_seed, realization_index) into
/// decorrelated substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Per-realization random substream. Each (master_seed, realization_index)
/// pair owns an independent mt19937_64 stream, so sampled matrices never
/// depend on scheduling or worker count.
///
/// Gaussians come from Box-Muller on explicitly constructed uniforms rather
/// than std::normal_distribution, whose algorithm is implementation-defined.
class SubstreamRng {
public:
    SubstreamRng(std::uint64_t master_seed, std::uint64_t realization_index)
        : gen_(mix64(mix64(master_seed) ^
                     (realization_index * 0xD2B74407B1CE6E93ULL + 0x8BB84B93962EACC9ULL))) {}

    /// Uniform in (0, 1]; 53-bit resolution.
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal draw.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Exponential(1) draw (inverse transform); used by synthetic samplers.
    double exponential() { return -std::log(uniform()); }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace toeplab
