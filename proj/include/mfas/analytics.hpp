#pragma once

#include <cmath>
#include <stdexcept>

#include "mfas/rng.hpp"

namespace mfas {

struct SystemParams {
    int u_count = 2;        // total users sharing the channel
    double sigma_s2 = 1.0;  // symbol power
    double sigma_n2 = 0.0;  // per-element noise power

    void validate() const {
        if (u_count < 1) throw std::invalid_argument("SystemParams: u_count must be >= 1");
        if (sigma_s2 <= 0.0) throw std::invalid_argument("SystemParams: sigma_s2 must be positive");
        if (sigma_n2 < 0.0) throw std::invalid_argument("SystemParams: sigma_n2 must be nonnegative");
    }
};

enum class SirRegime { interference_limited, general };

// Closed-form law of the effective-channel SIR:
//   F(t) = 1 - e^{-a t} (1 + b t)^{-k},  a = c / Omega_u, b = 1, k = U - 1,
// with c the noise-to-signal ratio scaled by the active-element count. The
// interference-limited regime is exactly a = 0.
struct SirDistribution {
    double a = 0.0;
    double b = 1.0;
    int k = 0;
    SirRegime regime = SirRegime::interference_limited;
};

inline SirDistribution make_sir_distribution(double omega_u, const SystemParams& params,
                                             int pattern_norm_sq) {
    params.validate();
    if (omega_u <= 0.0)
        throw std::domain_error("make_sir_distribution: effective variance must be positive");
    if (pattern_norm_sq < 1)
        throw std::invalid_argument("make_sir_distribution: at least one active element required");
    const double c = params.sigma_n2 / params.sigma_s2 * pattern_norm_sq;
    SirDistribution dist;
    dist.a = c / omega_u;
    dist.b = 1.0;
    dist.k = params.u_count - 1;
    dist.regime = c == 0.0 ? SirRegime::interference_limited : SirRegime::general;
    return dist;
}

// Complementary CDF, e^{-a t} (1 + b t)^{-k}. Evaluated directly so deep
// tails keep full relative precision (the CDF saturates at 1 in doubles long
// before the tail underflows).
inline double sir_survival(const SirDistribution& dist, double t) {
    if (!(t >= 0.0)) throw std::domain_error("sir_survival: threshold must be nonnegative");
    return std::exp(-dist.a * t - dist.k * std::log1p(dist.b * t));
}

inline double sir_cdf(const SirDistribution& dist, double t) {
    if (!(t >= 0.0)) throw std::domain_error("sir_cdf: threshold must be nonnegative");
    return 1.0 - sir_survival(dist, t);
}

inline double sir_pdf(const SirDistribution& dist, double t) {
    if (!(t >= 0.0)) throw std::domain_error("sir_pdf: argument must be nonnegative");
    const double tail = std::exp(-dist.a * t - (dist.k + 1) * std::log1p(dist.b * t));
    return tail * (dist.a * (1.0 + dist.b * t) + dist.k * dist.b);
}

// Outage probability at a linear threshold; dB conversion happens at the
// CLI/experiments boundary.
inline double outage_probability(const SirDistribution& dist, double gamma_th) {
    return sir_cdf(dist, gamma_th);
}

// Expected number of concurrently served users, U (1 - p_out).
inline double multiplexing_gain(const SystemParams& params, double gamma,
                                const SirDistribution& dist) {
    params.validate();
    return params.u_count * (1.0 - outage_probability(dist, gamma));
}

// One draw of S = X / (Y + c) with X ~ Exp(Omega_u) and
// Y ~ Gamma(U-1, Omega_u); the Monte Carlo leg of the validation
// experiments. U = 1 makes Y a point mass at zero.
inline double sample_sir(double omega_u, int u_count, double c, RandomStream& rng) {
    if (omega_u <= 0.0) throw std::domain_error("sample_sir: effective variance must be positive");
    if (u_count < 1) throw std::invalid_argument("sample_sir: u_count must be >= 1");
    const double x = rng.exponential(omega_u);
    const double y = rng.gamma_int(u_count - 1, omega_u);
    return x / (y + c);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace mfas
