#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace mfas {

// SplitMix64 finalizer. Used as the mixing function for substream derivation
// and for seeding the main generator state.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// FNV-1a over a short tag, for naming stream domains ("fig2", "fig8_em", ...).
inline constexpr std::uint64_t domain_tag(std::string_view tag) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : tag) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001B3ULL;
    }
    return h;
}

// xoshiro256++ generator with counter-based substream derivation.
//
// Substream contract: the stream for (master_seed, domain, index) is obtained
// by hashing the triple through mix64 and expanding the result into the
// generator state. Streams are therefore fully determined by the triple and
// independent of the order in which trials execute or of the thread count.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) {
            s = mix64(s);
            w = s;
        }
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
    }

    static RandomStream substream(std::uint64_t master_seed, std::uint64_t domain,
                                  std::uint64_t index) {
        return RandomStream(mix64(mix64(mix64(master_seed) ^ domain) ^ index));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe as a logarithm argument.
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    bool bernoulli(double prob) { return uniform01() < prob; }

    // Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double theta = 2.0 * M_PI * uniform01();
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Circularly symmetric complex normal with E|z|^2 = 1.
    std::complex<double> complex_normal() {
        const double r = std::sqrt(-std::log(uniform_pos()));
        const double theta = 2.0 * M_PI * uniform01();
        return {r * std::cos(theta), r * std::sin(theta)};
    }

    // Exponential with the given scale (mean).
    double exponential(double scale) {
        if (scale <= 0.0) throw std::domain_error("exponential: scale must be positive");
        return -scale * std::log(uniform_pos());
    }

    // Gamma with integer shape as a sum of exponentials; shape 0 is a point
    // mass at zero.
    double gamma_int(int shape, double scale) {
        if (shape < 0) throw std::domain_error("gamma_int: shape must be nonnegative");
        double sum = 0.0;
        for (int i = 0; i < shape; ++i) sum += -std::log(uniform_pos());
        return scale * sum;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4]{};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mfas
