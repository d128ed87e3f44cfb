#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mfas/correlation.hpp"
#include "mfas/pattern.hpp"

namespace mfas {

// Zero-denominator SIR (no interference, no noise). Compares greater than
// any finite SIR and serializes as "inf".
inline constexpr double kInfiniteSir = std::numeric_limits<double>::infinity();

// Optional per-element phase table modelling propagation inside the feed
// guide; disabled by default (phases are absorbed into the statistical
// channel).
struct PhaseTable {
    std::vector<std::complex<double>> v;
};

// phi_k = -2 pi x_k / lambda_g with x_k the element offset along dimension 1.
inline PhaseTable make_waveguide_phases(const GridSpec& grid, double guide_wavelength) {
    grid.validate();
    if (guide_wavelength <= 0.0)
        throw std::invalid_argument("make_waveguide_phases: guide wavelength must be positive");
    PhaseTable table;
    table.v.resize(grid.size());
    for (int m = 1; m <= grid.size(); ++m) {
        const ElementIndex e = invert_index(m, grid);
        const double x = grid.n1 > 1 ? (e.i1 - 1) * grid.w1 / (grid.n1 - 1) : 0.0;
        const double phi = -2.0 * M_PI * x / guide_wavelength;
        table.v[m - 1] = std::polar(1.0, phi);
    }
    return table;
}

// z = sum_i omega_i h_i (with phases applied when a table is supplied).
inline std::complex<double> effective_channel(const ActivationPattern& omega,
                                              const Eigen::VectorXcd& h,
                                              const PhaseTable* phases = nullptr) {
    if (omega.size() != h.size())
        throw std::invalid_argument("effective_channel: pattern/channel length mismatch");
    if (phases && static_cast<int>(phases->v.size()) != omega.size())
        throw std::invalid_argument("effective_channel: phase table length mismatch");
    std::complex<double> z = 0.0;
    for (int i = 0; i < omega.size(); ++i) {
        if (!omega.bits[i]) continue;
        z += phases ? phases->v[i] * h(i) : h(i);
    }
    return z;
}

// |omega^T H_u|^2 / ( sum_{u' != u} |omega^T H_u'|^2 + ||omega||^2 nr ) with
// nr = sigma_n^2 / sigma_s^2. A zero denominator yields the infinite-SIR
// sentinel.
inline double instantaneous_sir(const ActivationPattern& omega, const MultiUserChannel& ch,
                                int u, double noise_ratio) {
    if (u < 0 || u >= ch.u_count())
        throw std::out_of_range("instantaneous_sir: user index out of range");
    if (omega.size() != ch.element_count())
        throw std::invalid_argument("instantaneous_sir: pattern length mismatch");
    if (noise_ratio < 0.0)
        throw std::invalid_argument("instantaneous_sir: noise ratio must be nonnegative");

    const int users = ch.u_count();
    std::vector<std::complex<double>> z(users, 0.0);
    for (int i = 0; i < omega.size(); ++i) {
        if (!omega.bits[i]) continue;
        for (int j = 0; j < users; ++j) z[j] += ch.h(j, i);
    }
    double interference = 0.0;
    for (int j = 0; j < users; ++j)
        if (j != u) interference += std::norm(z[j]);
    const double denom = interference + omega.active_count * noise_ratio;
    const double signal = std::norm(z[u]);
    if (denom == 0.0) return kInfiniteSir;
    return signal / denom;
}

struct SelectionResult {
    ActivationPattern pattern;
    double sir = 0.0;  // linear
    int iterations_used = 0;
    bool early_stopped = false;
};

// Random-search selection: up to p i.i.d. Bernoulli(q) patterns, running
// maximum with >= so later ties replace earlier, early exit once the
// threshold is met.
inline SelectionResult fast_multi_activation_select(const MultiUserChannel& ch, int u, int p,
                                                    double gamma_th, double noise_ratio,
                                                    RandomStream& rng, double q = 0.5) {
    if (p < 1) throw std::invalid_argument("fast_multi_activation_select: p must be >= 1");
    const int n = ch.element_count();
    SelectionResult best;
    best.sir = -std::numeric_limits<double>::infinity();
    for (int i = 1; i <= p; ++i) {
        ActivationPattern pat = random_pattern(rng, q, n);
        const double s = instantaneous_sir(pat, ch, u, noise_ratio);
        if (s >= best.sir) {
            best.sir = s;
            best.pattern = std::move(pat);
        }
        best.iterations_used = i;
        if (best.sir >= gamma_th) {
            best.early_stopped = true;
            break;
        }
    }
    return best;
}

// Global optimum over all 2^N - 1 patterns; feasible only for small N.
// Ties resolve toward the lexicographically smallest bit vector.
inline SelectionResult exhaustive_select(const MultiUserChannel& ch, int u,
                                         double noise_ratio) {
    const int n = ch.element_count();
    if (n > 20)
        throw std::invalid_argument("exhaustive_select: refused for N > 20 (2^N patterns)");
    const std::uint64_t limit = (std::uint64_t{1} << n) - 1;

    auto lex_less = [](std::uint64_t a, std::uint64_t b) {
        if (a == b) return false;
        const int j = std::countr_zero(a ^ b);
        return ((a >> j) & 1u) == 0;  // 0 sorts before 1 at the first difference
    };

    SelectionResult best;
    best.sir = -std::numeric_limits<double>::infinity();
    std::uint64_t best_mask = 0;
    for (std::uint64_t mask = 1; mask <= limit; ++mask) {
        const ActivationPattern pat = ActivationPattern::from_mask(mask, n);
        const double s = instantaneous_sir(pat, ch, u, noise_ratio);
        if (s > best.sir || (s == best.sir && lex_less(mask, best_mask))) {
            best.sir = s;
            best.pattern = pat;
            best_mask = mask;
        }
    }
    best.iterations_used = static_cast<int>(limit);
    return best;
}

// Single-position baseline: best of the N one-element patterns.
inline SelectionResult slow_fama_select(const MultiUserChannel& ch, int u, double noise_ratio) {
    const int n = ch.element_count();
    SelectionResult best;
    best.sir = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        ActivationPattern pat = ActivationPattern::single(i, n);
        const double s = instantaneous_sir(pat, ch, u, noise_ratio);
        if (s > best.sir) {
            best.sir = s;
            best.pattern = std::move(pat);
        }
    }
    best.iterations_used = n;
    return best;
}

// Port-selection MRC stand-in: the n_rf strongest desired-channel ports,
// maximal-ratio weights w_i = conj(h_u^i) on those ports. With n_rf = 1 this
// is best-desired-power port selection.
struct MrcResult {
    ActivationPattern ports;
    double sir = 0.0;
};

inline MrcResult mrc_baseline_select(const MultiUserChannel& ch, int u, int n_rf,
                                     double noise_ratio) {
    const int n = ch.element_count();
    if (n_rf < 1 || n_rf > n)
        throw std::invalid_argument("mrc_baseline_select: n_rf must lie in [1, N]");
    if (u < 0 || u >= ch.u_count())
        throw std::out_of_range("mrc_baseline_select: user index out of range");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::norm(ch.h(u, a)) > std::norm(ch.h(u, b));
    });

    std::vector<std::uint8_t> bits(n, 0);
    double weight_norm_sq = 0.0;
    std::vector<std::complex<double>> z(ch.u_count(), 0.0);
    for (int r = 0; r < n_rf; ++r) {
        const int i = order[r];
        bits[i] = 1;
        const std::complex<double> w = std::conj(ch.h(u, i));
        weight_norm_sq += std::norm(w);
        for (int j = 0; j < ch.u_count(); ++j) z[j] += w * ch.h(j, i);
    }
    double interference = 0.0;
    for (int j = 0; j < ch.u_count(); ++j)
        if (j != u) interference += std::norm(z[j]);
    const double denom = interference + weight_norm_sq * noise_ratio;
    MrcResult res;
    res.ports = ActivationPattern::from_bits(std::move(bits));
    res.sir = denom == 0.0 ? kInfiniteSir : std::norm(z[u]) / denom;
    return res;
}

}  // namespace mfas
