#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfas/correlation.hpp"
#include "mfas/pattern.hpp"

namespace mfas {

// One equicorrelated diagonal block: unit diagonal, constant off-diagonal
// rho, scaled by the parent sigma2.
struct Block {
    int size = 1;
    double rho = 0.0;
};

// Block-diagonal surrogate of a dense correlation matrix. Blocks cover the
// element axis contiguously in order, so the trace of the implied matrix is
// always N * sigma2.
struct BlockApproximation {
    std::vector<Block> blocks;
    double sigma2 = 1.0;

    int block_count() const { return static_cast<int>(blocks.size()); }
    int total_size() const {
        int n = 0;
        for (const auto& b : blocks) n += b.size;
        return n;
    }
};

// Spectrum of one unit-diagonal equicorrelated block:
// {1 + (L-1) rho} once and {1 - rho} with multiplicity L-1.
inline std::vector<double> block_eigenvalues(int size, double rho) {
    if (size < 1) throw std::invalid_argument("block_eigenvalues: size must be positive");
    if (rho < 0.0 || rho > 1.0)
        throw std::domain_error("block_eigenvalues: rho must lie in [0,1]");
    std::vector<double> eig;
    eig.reserve(size);
    eig.push_back(1.0 + (size - 1) * rho);
    for (int i = 1; i < size; ++i) eig.push_back(1.0 - rho);
    return eig;
}

// Full eigenvalue list of Sigma, descending.
inline std::vector<double> sorted_eigenvalues(const CorrelationMatrix& sigma) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma.data, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("sorted_eigenvalues: eigendecomposition failed");
    std::vector<double> eig(es.eigenvalues().data(), es.eigenvalues().data() + sigma.size());
    std::sort(eig.begin(), eig.end(), std::greater<>());
    return eig;
}

// Descending spectrum split into the D dominant eigenvalues and the rest.
struct EigenSplit {
    std::vector<double> dominant;
    std::vector<double> remaining;
};

inline EigenSplit split_spectrum(const std::vector<double>& descending, int d_count) {
    if (d_count < 1 || d_count > static_cast<int>(descending.size()))
        throw std::invalid_argument("split_spectrum: block count out of range");
    return {{descending.begin(), descending.begin() + d_count},
            {descending.begin() + d_count, descending.end()}};
}

// Smallest D whose top-D eigenvalues capture the requested share of the
// trace.
inline int choose_block_count(const std::vector<double>& descending,
                              double energy_fraction = 0.95) {
    if (descending.empty()) throw std::invalid_argument("choose_block_count: empty spectrum");
    if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
        throw std::invalid_argument("choose_block_count: energy fraction must be in (0,1]");
    const double total = std::accumulate(descending.begin(), descending.end(), 0.0);
    double cum = 0.0;
    for (std::size_t d = 0; d < descending.size(); ++d) {
        cum += descending[d];
        if (cum >= energy_fraction * total) return static_cast<int>(d) + 1;
    }
    return static_cast<int>(descending.size());
}

// Two conventions for the per-block correlation coefficient given the
// principal eigenvalue lambda_d and the L_d - 1 eigenvalues assigned to the
// block:
//   paper:        ((L-1) lambda_d - sum_k lambda_k) / (2 (L-1))
//   ls_optimal:   ((L-1) lambda_d - sum_k lambda_k) / (L (L-1))
// The second is the stationary point of the squared block error; the first
// matches it only at L = 2. Both are clamped to [0,1].
enum class RhoMode { paper, ls_optimal };

inline double optimal_rho(double lambda_d, std::span<const double> assigned, int l_d,
                          RhoMode mode = RhoMode::paper) {
    if (l_d < 1) throw std::invalid_argument("optimal_rho: block size must be positive");
    if (l_d == 1) return 0.0;  // scalar block carries no correlation
    if (static_cast<int>(assigned.size()) != l_d - 1)
        throw std::invalid_argument("optimal_rho: a block of size L carries L-1 assigned eigenvalues");
    const double sum = std::accumulate(assigned.begin(), assigned.end(), 0.0);
    const double num = (l_d - 1) * lambda_d - sum;
    const double den = mode == RhoMode::paper ? 2.0 * (l_d - 1)
                                              : static_cast<double>(l_d) * (l_d - 1);
    return std::clamp(num / den, 0.0, 1.0);
}

// Squared spectrum mismatch of a candidate block: principal term plus one
// term per supplied eigenvalue.
inline double assignment_error(double lambda_d, double rho_d,
                               std::span<const double> assigned_plus_current, int l_d) {
    const double principal = 1.0 + rho_d * (l_d - 1) - lambda_d;
    double err = principal * principal;
    for (double lam : assigned_plus_current) {
        const double t = lam - 1.0 + rho_d;
        err += t * t;
    }
    return err;
}

namespace detail {

inline std::vector<double> normalized_spectrum(const CorrelationMatrix& sigma) {
    std::vector<double> eig = sorted_eigenvalues(sigma);
    for (double& v : eig) v /= sigma.sigma2;
    return eig;
}

}  // namespace detail

// Constant block-correlation model: one rho for every block; block sizes
// chosen by exact dynamic programming to minimize the squared mismatch
// between the top-D eigenvalues and the block principals (L_d - 1) rho + 1,
// subject to sum L_d = N.
inline BlockApproximation cbcm_fit(const CorrelationMatrix& sigma, double rho, int d_count) {
    if (rho < 0.0 || rho > 1.0) throw std::domain_error("cbcm_fit: rho must lie in [0,1]");
    const int n = sigma.size();
    if (d_count < 1 || d_count > n)
        throw std::invalid_argument("cbcm_fit: block count must lie in [1, N]");

    const std::vector<double> eig = detail::normalized_spectrum(sigma);
    const int d_total = d_count;

    const double inf = std::numeric_limits<double>::infinity();
    auto cost = [&](int d, int size) {
        const double t = eig[d] - ((size - 1) * rho + 1.0);
        return t * t;
    };

    // best[d][m]: minimal cost assigning sizes to blocks d..D-1 using m
    // elements in total.
    std::vector<std::vector<double>> best(d_total + 1, std::vector<double>(n + 1, inf));
    std::vector<std::vector<int>> pick(d_total, std::vector<int>(n + 1, 0));
    best[d_total][0] = 0.0;
    for (int d = d_total - 1; d >= 0; --d) {
        const int blocks_left = d_total - d;
        for (int m = blocks_left; m <= n; ++m) {
            for (int size = 1; size <= m - (blocks_left - 1); ++size) {
                const double c = cost(d, size) + best[d + 1][m - size];
                if (c < best[d][m]) {
                    best[d][m] = c;
                    pick[d][m] = size;
                }
            }
        }
    }

    BlockApproximation approx;
    approx.sigma2 = sigma.sigma2;
    int m = n;
    for (int d = 0; d < d_total; ++d) {
        const int size = pick[d][m];
        approx.blocks.push_back({size, size > 1 ? rho : 0.0});
        m -= size;
    }
    return approx;
}

// Variable block-correlation model. The D dominant eigenvalues seed the
// blocks; each remaining eigenvalue is assigned greedily to the block where
// the re-optimized rho yields the smallest assignment error. Running sums
// keep the whole pass O(N*D). Ties go to the smaller current block, then the
// smaller block index.
inline BlockApproximation vbcm_fit(const CorrelationMatrix& sigma, int d_count,
                                   RhoMode mode = RhoMode::paper) {
    const int n = sigma.size();
    if (d_count < 1 || d_count > n)
        throw std::invalid_argument("vbcm_fit: block count must lie in [1, N]");

    const std::vector<double> eig = detail::normalized_spectrum(sigma);

    struct State {
        double principal = 0.0;
        int assigned = 0;   // non-principal eigenvalues held
        double sum = 0.0;   // their sum
        double sumsq = 0.0; // their squared sum
        double rho = 0.0;
    };
    std::vector<State> blocks(d_count);
    for (int d = 0; d < d_count; ++d) blocks[d].principal = eig[d];

    for (int idx = d_count; idx < n; ++idx) {
        const double cur = eig[idx];
        int best_d = -1;
        double best_err = std::numeric_limits<double>::infinity();
        double best_rho = 0.0;
        for (int d = 0; d < d_count; ++d) {
            const State& s = blocks[d];
            const int l = s.assigned + 2;  // size with cur added
            const double sum = s.sum + cur;
            const double sumsq = s.sumsq + cur * cur;
            const double num = (l - 1) * s.principal - sum;
            const double den = mode == RhoMode::paper ? 2.0 * (l - 1)
                                                      : static_cast<double>(l) * (l - 1);
            const double rho = std::clamp(num / den, 0.0, 1.0);
            const double principal_term = 1.0 + rho * (l - 1) - s.principal;
            const double one_minus = 1.0 - rho;
            const double err = principal_term * principal_term + sumsq -
                               2.0 * one_minus * sum + (l - 1) * one_minus * one_minus;
            const bool better =
                err < best_err ||
                (err == best_err && best_d >= 0 &&
                 s.assigned < blocks[best_d].assigned);
            if (better) {
                best_d = d;
                best_err = err;
                best_rho = rho;
            }
        }
        State& s = blocks[best_d];
        s.assigned += 1;
        s.sum += cur;
        s.sumsq += cur * cur;
        s.rho = best_rho;
    }

    BlockApproximation approx;
    approx.sigma2 = sigma.sigma2;
    for (const State& s : blocks)
        approx.blocks.push_back({s.assigned + 1, s.assigned > 0 ? s.rho : 0.0});
    return approx;
}

// Spectrum of the implied block-diagonal matrix, descending, in the same
// scale as Sigma.
inline std::vector<double> approx_eigenvalues(const BlockApproximation& approx) {
    std::vector<double> eig;
    eig.reserve(approx.total_size());
    for (const auto& b : approx.blocks)
        for (double v : block_eigenvalues(b.size, b.rho)) eig.push_back(v * approx.sigma2);
    std::sort(eig.begin(), eig.end(), std::greater<>());
    return eig;
}

// || eig(Sigma) - eig(Sigma_hat) ||_2^2 with both spectra descending.
inline double eigen_approx_error(const CorrelationMatrix& sigma,
                                 const BlockApproximation& approx) {
    if (approx.total_size() != sigma.size())
        throw std::invalid_argument("eigen_approx_error: approximation covers wrong element count");
    const std::vector<double> full = sorted_eigenvalues(sigma);
    const std::vector<double> surrogate = approx_eigenvalues(approx);
    double err = 0.0;
    for (std::size_t i = 0; i < full.size(); ++i) {
        const double t = full[i] - surrogate[i];
        err += t * t;
    }
    return err;
}

// Dense matrix implied by the approximation (tests and the exact-path
// quadratic form).
inline Eigen::MatrixXd assemble(const BlockApproximation& approx) {
    const int n = approx.total_size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    int offset = 0;
    for (const auto& b : approx.blocks) {
        for (int i = 0; i < b.size; ++i)
            for (int j = 0; j < b.size; ++j)
                m(offset + i, offset + j) = approx.sigma2 * (i == j ? 1.0 : b.rho);
        offset += b.size;
    }
    return m;
}

// Effective single-chain channel variance, blockwise:
// Omega = sigma2 * sum_d [ k_d + rho_d k_d (k_d - 1) ] with k_d active
// elements in block d.
inline double effective_variance(const BlockApproximation& approx,
                                 const ActivationPattern& omega) {
    if (omega.size() != approx.total_size())
        throw std::invalid_argument("effective_variance: pattern length mismatch");
    if (omega.active_count == 0)
        throw std::domain_error("effective_variance: pattern must activate at least one element");
    double total = 0.0;
    int offset = 0;
    for (const auto& b : approx.blocks) {
        int k = 0;
        for (int i = 0; i < b.size; ++i) k += omega.bits[offset + i];
        total += k + b.rho * k * (k - 1.0);
        offset += b.size;
    }
    return approx.sigma2 * total;
}

// Dense path: omega^T Sigma omega on the exact correlation matrix.
inline double effective_variance(const CorrelationMatrix& sigma,
                                 const ActivationPattern& omega) {
    if (omega.size() != sigma.size())
        throw std::invalid_argument("effective_variance: pattern length mismatch");
    if (omega.active_count == 0)
        throw std::domain_error("effective_variance: pattern must activate at least one element");
    double total = 0.0;
    for (int i = 0; i < sigma.size(); ++i) {
        if (!omega.bits[i]) continue;
        for (int j = 0; j < sigma.size(); ++j)
            if (omega.bits[j]) total += sigma.data(i, j);
    }
    return total;
}

inline void write_blocks_csv(const BlockApproximation& approx, std::ostream& os) {
    os << "d,L_d,rho_d\n";
    char buf[64];
    for (std::size_t d = 0; d < approx.blocks.size(); ++d) {
        std::snprintf(buf, sizeof buf, "%zu,%d,%.17g\n", d + 1, approx.blocks[d].size,
                      approx.blocks[d].rho);
        os << buf;
    }
}

}  // namespace mfas
