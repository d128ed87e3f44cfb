#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mfas/rng.hpp"

namespace mfas {

// Binary element-activation vector. At least one element is always active.
struct ActivationPattern {
    std::vector<std::uint8_t> bits;
    int active_count = 0;

    int size() const { return static_cast<int>(bits.size()); }

    static ActivationPattern from_bits(std::vector<std::uint8_t> b) {
        ActivationPattern p;
        p.bits = std::move(b);
        for (auto v : p.bits) p.active_count += v ? 1 : 0;
        if (p.active_count == 0)
            throw std::invalid_argument("ActivationPattern: at least one element must be active");
        return p;
    }

    static ActivationPattern single(int index, int n) {
        std::vector<std::uint8_t> b(n, 0);
        b.at(index) = 1;
        return from_bits(std::move(b));
    }

    static ActivationPattern all_on(int n) {
        return from_bits(std::vector<std::uint8_t>(n, 1));
    }

    // Bit i of mask activates element i. Test and exhaustive-search helper.
    static ActivationPattern from_mask(std::uint64_t mask, int n) {
        std::vector<std::uint8_t> b(n, 0);
        for (int i = 0; i < n; ++i) b[i] = (mask >> i) & 1u;
        return from_bits(std::move(b));
    }
};

// Draws i.i.d. Bernoulli(q) bits into an existing buffer; all-zero draws are
// rejected and redrawn whole. Returns the active count. Buffer variant so
// hot Monte Carlo loops can avoid reallocating.
inline int random_pattern_into(RandomStream& rng, double q, std::vector<std::uint8_t>& bits) {
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("random_pattern: activation probability must be in (0,1)");
    if (bits.empty()) throw std::invalid_argument("random_pattern: n must be positive");
    int active = 0;
    do {
        active = 0;
        for (auto& b : bits) {
            b = rng.bernoulli(q) ? 1 : 0;
            active += b;
        }
    } while (active == 0);
    return active;
}

inline ActivationPattern random_pattern(RandomStream& rng, double q, int n) {
    if (n < 1) throw std::invalid_argument("random_pattern: n must be positive");
    ActivationPattern p;
    p.bits.resize(n);
    p.active_count = random_pattern_into(rng, q, p.bits);
    return p;
}

}  // namespace mfas
