#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "mfas/bessel.hpp"
#include "mfas/geometry.hpp"
#include "mfas/rng.hpp"

namespace mfas {

// Dense spatial correlation matrix of the element channels. Jakes
// correlations are real, so the matrix is real symmetric with sigma2 on the
// diagonal.
struct CorrelationMatrix {
    Eigen::MatrixXd data;
    double sigma2 = 1.0;

    int size() const { return static_cast<int>(data.rows()); }
};

// Sigma[a,b] = sigma2 * J0(2*pi*d(a,b)) with d in wavelengths.
inline CorrelationMatrix build_jakes_correlation(const GridSpec& grid, double sigma2 = 1.0) {
    grid.validate();
    if (sigma2 <= 0.0) throw std::invalid_argument("build_jakes_correlation: sigma2 must be positive");
    const int n = grid.size();
    Eigen::MatrixXd m(n, n);
    for (int b = 0; b < n; ++b) {
        const ElementIndex eb = invert_index(b + 1, grid);
        for (int a = 0; a <= b; ++a) {
            const ElementIndex ea = invert_index(a + 1, grid);
            const double d = element_distance(grid, ea, eb);
            const double v = sigma2 * bessel_j0(2.0 * M_PI * d);
            m(a, b) = v;
            m(b, a) = v;
        }
    }
    return {std::move(m), sigma2};
}

// Factor F with F F^T ~= Sigma, from a symmetric eigendecomposition with
// negative eigenvalues clipped to zero. Clipping (rather than jitter)
// preserves the dominant spectrum that the block model consumes.
struct ChannelFactor {
    Eigen::MatrixXd factor;
    double clipped_mass = 0.0;  // total magnitude of clipped negative eigenvalues
    bool clip_warning = false;  // clipped_mass exceeded 1e-6 * trace(Sigma)

    int size() const { return static_cast<int>(factor.rows()); }
};

inline ChannelFactor factorize(const CorrelationMatrix& sigma) {
    const auto& s = sigma.data;
    if (s.rows() != s.cols()) throw std::invalid_argument("factorize: matrix must be square");
    if (!s.isApprox(s.transpose(), 1e-12))
        throw std::invalid_argument("factorize: matrix must be symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("factorize: eigendecomposition failed");

    Eigen::VectorXd lam = es.eigenvalues();
    double clipped = 0.0;
    for (int i = 0; i < lam.size(); ++i) {
        if (lam(i) < 0.0) {
            clipped += -lam(i);
            lam(i) = 0.0;
        }
    }
    ChannelFactor f;
    f.factor = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
    f.clipped_mass = clipped;
    f.clip_warning = clipped > 1e-6 * s.trace();
    return f;
}

// One channel vector per user, rows mutually independent, each row
// CN(0, Sigma).
struct MultiUserChannel {
    Eigen::MatrixXcd h;  // u_count x N

    int u_count() const { return static_cast<int>(h.rows()); }
    int element_count() const { return static_cast<int>(h.cols()); }
};

// Row u = F g with g i.i.d. CN(0,1); E|h_i|^2 = Sigma_ii.
inline MultiUserChannel sample_channels(const ChannelFactor& factor, int u_count,
                                        RandomStream& rng) {
    if (u_count < 1) throw std::invalid_argument("sample_channels: u_count must be positive");
    const int n = factor.size();
    Eigen::MatrixXcd h(u_count, n);
    Eigen::VectorXcd g(n);
    for (int u = 0; u < u_count; ++u) {
        for (int i = 0; i < n; ++i) g(i) = rng.complex_normal();
        h.row(u) = (factor.factor * g).transpose();
    }
    return {std::move(h)};
}

// Row-major CSV dump with 1-based element numbers.
inline void write_correlation_csv(const CorrelationMatrix& sigma, std::ostream& os) {
    os << "i,j,value\n";
    char buf[64];
    for (int i = 0; i < sigma.size(); ++i)
        for (int j = 0; j < sigma.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", i + 1, j + 1, sigma.data(i, j));
            os << buf;
        }
}

}  // namespace mfas
