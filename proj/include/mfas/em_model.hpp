#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfas/geometry.hpp"
#include "mfas/pattern.hpp"

namespace mfas::em {

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Complex = std::complex<double>;

// A y-aligned magnetic dipole. Positions are in wavelengths; the moment is a
// complex amplitude (unit magnitude by default, since the SIR is invariant
// to a common moment scale).
struct DipoleSource {
    Vec3 position = Vec3::Zero();
    Complex moment = 1.0;
};

// Dipole scene for up to U transmitters, each a set of active dipoles.
// k0 is the wavenumber in the chosen length unit (2*pi when lengths are in
// wavelengths); omega and mu0 only set a common field scale.
struct TxScene {
    std::vector<std::vector<DipoleSource>> transmitters;
    double k0 = 2.0 * M_PI;
    double omega = 2.0 * M_PI * 26.5e9;
    double mu0 = 4.0e-7 * M_PI;

    int tx_count() const { return static_cast<int>(transmitters.size()); }
};

// The three summands of the magnetic-dipole near field, kept separate so
// their scaling can be inspected:
//   radiating:     (k0^2 / r)   ((m x r_hat) x r_hat) e^{-j k0 r}
//   electrostatic: (1 / r^3)    (3 r_hat (r_hat . m) - m) e^{-j k0 r}
//   induction:     (-j k0 / r^2)(3 r_hat (r_hat . m) - m) e^{-j k0 r}
// all scaled by j omega mu0 / (4 pi). The electrostatic and induction parts
// together form the (1 - j k0 r)/r^3 term.
struct DipoleFieldTerms {
    CVec3 radiating = CVec3::Zero();
    CVec3 electrostatic = CVec3::Zero();
    CVec3 induction = CVec3::Zero();

    CVec3 total() const { return radiating + electrostatic + induction; }
};

inline DipoleFieldTerms dipole_field_terms(const DipoleSource& src, const Vec3& obs,
                                           double k0, double omega, double mu0) {
    const Vec3 rvec = obs - src.position;
    const double r = rvec.norm();
    if (r <= 0.0) throw std::domain_error("dipole_field: observation point on the source");
    const Vec3 rhat = rvec / r;

    const CVec3 m = CVec3(0.0, src.moment, 0.0);
    const CVec3 m_cross_r = m.cross(rhat.cast<Complex>());
    const CVec3 transverse = m_cross_r.cross(rhat.cast<Complex>());
    const CVec3 longitudinal = 3.0 * rhat.cast<Complex>() * (rhat.cast<Complex>().dot(m)) - m;

    const Complex j(0.0, 1.0);
    const Complex prefactor = j * omega * mu0 / (4.0 * M_PI);
    const Complex phase = std::exp(-j * k0 * r);

    DipoleFieldTerms t;
    t.radiating = prefactor * (k0 * k0 / r) * phase * transverse;
    t.electrostatic = prefactor * (1.0 / (r * r * r)) * phase * longitudinal;
    t.induction = prefactor * (-j * k0 / (r * r)) * phase * longitudinal;
    return t;
}

inline CVec3 dipole_field(const DipoleSource& src, const Vec3& obs, double k0, double omega,
                          double mu0) {
    return dipole_field_terms(src, obs, k0, omega, mu0).total();
}

// Superposition over the active dipole set of one transmitter.
inline CVec3 total_field(const TxScene& scene, int tx_index, const Vec3& obs) {
    if (tx_index < 0 || tx_index >= scene.tx_count())
        throw std::out_of_range("total_field: transmitter index out of range");
    CVec3 e = CVec3::Zero();
    for (const DipoleSource& d : scene.transmitters[tx_index])
        e += dipole_field(d, obs, scene.k0, scene.omega, scene.mu0);
    return e;
}

// Receive aperture in the plane y = origin.y, spanning
// [origin.x, origin.x + d_w] x [origin.z, origin.z + d_h], sampled on an
// nx x nz point lattice (both edges included).
struct ApertureGrid {
    Vec3 origin = Vec3(-3.5, 0.0, 0.0);
    double d_w = 7.0;   // effective width (wavelengths)
    double d_h = 4.0;   // effective height (wavelengths)
    // 128x64 keeps the trapezoid doubling-change below 0.5% for sources a few
    // wavelengths from the aperture.
    int nx = 128;
    int nz = 64;
    double z10 = 377.0;  // TE10 modal impedance (ohms); common factor in SIR

    void validate() const {
        if (d_w <= 0.0 || d_h <= 0.0)
            throw std::invalid_argument("ApertureGrid: aperture dimensions must be positive");
        if (nx < 8 || nz < 8)
            throw std::invalid_argument("ApertureGrid: sample counts must be at least 8");
        if (z10 <= 0.0) throw std::invalid_argument("ApertureGrid: modal impedance must be positive");
    }
};

// Normalized dominant-mode profile, sqrt(2/(d_w d_h Z10)) sin(pi z / d_h).
inline double te10_mode(double x, double z, const ApertureGrid& grid) {
    grid.validate();
    const double xi = x - grid.origin.x();
    const double zeta = z - grid.origin.z();
    const double eps = 1e-12;
    if (xi < -eps || xi > grid.d_w + eps || zeta < -eps || zeta > grid.d_h + eps)
        throw std::domain_error("te10_mode: point outside the aperture");
    return std::sqrt(2.0 / (grid.d_w * grid.d_h * grid.z10)) *
           std::sin(M_PI * zeta / grid.d_h);
}

// Field sampled on the aperture plane; (x, z) are absolute coordinates.
using FieldFn = std::function<CVec3(double x, double z)>;

namespace detail {

// Composite 2D trapezoid weight for lattice point (ix, iz).
inline double trapezoid_weight(int ix, int iz, const ApertureGrid& g) {
    const double wx = (ix == 0 || ix == g.nx - 1) ? 0.5 : 1.0;
    const double wz = (iz == 0 || iz == g.nz - 1) ? 0.5 : 1.0;
    return wx * wz;
}

}  // namespace detail

// Per-cell partial sums of the weighted overlap integrand
// E_y(x,z) te10(x,z) dx dz / Z10 over the n1 x n2 cell partition of the
// aperture. Summing a subset of cells restricts the integral to the
// footprint of the active elements; summing all cells reproduces the full
// overlap coefficient exactly.
inline std::vector<Complex> overlap_cell_sums(const FieldFn& field, const ApertureGrid& grid,
                                              const GridSpec& cells) {
    grid.validate();
    cells.validate();
    const double dx = grid.d_w / (grid.nx - 1);
    const double dz = grid.d_h / (grid.nz - 1);
    std::vector<Complex> sums(cells.size(), Complex(0.0, 0.0));
    for (int iz = 0; iz < grid.nz; ++iz) {
        const double z = grid.origin.z() + iz * dz;
        const int c2 = std::min(static_cast<int>((z - grid.origin.z()) / (grid.d_h / cells.n2)),
                                cells.n2 - 1);
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double x = grid.origin.x() + ix * dx;
            const int c1 = std::min(
                static_cast<int>((x - grid.origin.x()) / (grid.d_w / cells.n1)), cells.n1 - 1);
            const CVec3 e = field(x, z);
            const double mode = te10_mode(x, z, grid);
            const double w = detail::trapezoid_weight(ix, iz, grid) * dx * dz;
            sums[static_cast<std::size_t>(c2) * cells.n1 + c1] += e.y() * mode * w / grid.z10;
        }
    }
    return sums;
}

inline Complex combine_cell_sums(const std::vector<Complex>& cell_sums,
                                 const ActivationPattern& active) {
    if (active.size() != static_cast<int>(cell_sums.size()))
        throw std::invalid_argument("combine_cell_sums: pattern length mismatch");
    Complex b = 0.0;
    for (int i = 0; i < active.size(); ++i)
        if (active.bits[i]) b += cell_sums[i];
    return b;
}

// Outgoing-wave amplitude b = (1/Z10) integral of E_y times the conjugated
// mode profile over the aperture (the mode is real and y-polarized).
inline Complex overlap_coefficient(const FieldFn& field, const ApertureGrid& grid) {
    grid.validate();
    const double dx = grid.d_w / (grid.nx - 1);
    const double dz = grid.d_h / (grid.nz - 1);
    Complex acc = 0.0;
    for (int iz = 0; iz < grid.nz; ++iz) {
        const double z = grid.origin.z() + iz * dz;
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double x = grid.origin.x() + ix * dx;
            acc += field(x, z) .y() * te10_mode(x, z, grid) *
                   detail::trapezoid_weight(ix, iz, grid);
        }
    }
    return acc * dx * dz / grid.z10;
}

inline Complex overlap_coefficient(const TxScene& scene, int tx_index,
                                   const ApertureGrid& grid) {
    const double y = grid.origin.y();
    return overlap_coefficient(
        [&](double x, double z) { return total_field(scene, tx_index, Vec3(x, y, z)); }, grid);
}

// Doubling check: relative change of the overlap coefficient when both
// sample counts double. Used to flag insufficient quadrature resolution.
inline double overlap_convergence(const FieldFn& field, const ApertureGrid& grid) {
    ApertureGrid fine = grid;
    fine.nx = 2 * grid.nx;
    fine.nz = 2 * grid.nz;
    const Complex coarse = overlap_coefficient(field, grid);
    const Complex refined = overlap_coefficient(field, fine);
    const double scale = std::abs(refined);
    return scale == 0.0 ? 0.0 : std::abs(refined - coarse) / scale;
}

inline Complex s_parameter(Complex b, Complex a_incident) {
    if (a_incident == Complex(0.0, 0.0))
        throw std::domain_error("s_parameter: incident amplitude must be nonzero");
    return b / a_incident;
}

// |S_desired|^2 over the summed interferer couplings. Zero interference
// yields the infinite sentinel; the optional flag reports that case.
inline double em_sir(std::span<const Complex> s_row, int desired,
                     bool* zero_interference = nullptr) {
    const int u = static_cast<int>(s_row.size());
    if (desired < 0 || desired >= u) throw std::out_of_range("em_sir: desired index out of range");
    double interference = 0.0;
    for (int j = 0; j < u; ++j)
        if (j != desired) interference += std::norm(s_row[j]);
    if (zero_interference) *zero_interference = interference == 0.0;
    if (interference == 0.0) return std::numeric_limits<double>::infinity();
    return std::norm(s_row[desired]) / interference;
}

// Normalized magnitude correlation |<E_p, E_q>| / (||E_p|| ||E_q||) between
// vectorized complex field maps.
inline Eigen::MatrixXd field_correlation(const std::vector<Eigen::VectorXcd>& maps) {
    const int count = static_cast<int>(maps.size());
    if (count == 0) throw std::invalid_argument("field_correlation: no maps supplied");
    for (const auto& m : maps)
        if (m.size() != maps.front().size())
            throw std::invalid_argument("field_correlation: maps must share a shape");
    std::vector<double> norms(count);
    for (int i = 0; i < count; ++i) {
        norms[i] = maps[i].norm();
        if (norms[i] == 0.0) throw std::domain_error("field_correlation: zero-norm field map");
    }
    Eigen::MatrixXd corr(count, count);
    for (int p = 0; p < count; ++p) {
        corr(p, p) = 1.0;  // self-correlation by definition
        for (int q = p + 1; q < count; ++q) {
            const double v = std::abs(maps[p].dot(maps[q])) / (norms[p] * norms[q]);
            corr(p, q) = v;
            corr(q, p) = v;
        }
    }
    return corr;
}

// CSV grid of the y-component of a field map over the aperture lattice.
inline void write_field_map_csv(const FieldFn& field, const ApertureGrid& grid,
                                std::ostream& os) {
    grid.validate();
    os << "x,z,re,im\n";
    const double dx = grid.d_w / (grid.nx - 1);
    const double dz = grid.d_h / (grid.nz - 1);
    char buf[128];
    for (int iz = 0; iz < grid.nz; ++iz)
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double x = grid.origin.x() + ix * dx;
            const double z = grid.origin.z() + iz * dz;
            const Complex e = field(x, z).y();
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", x, z, e.real(),
                          e.imag());
            os << buf;
        }
}

inline void write_matrix_csv(const Eigen::MatrixXd& m, std::ostream& os) {
    os << "i,j,value\n";
    char buf[64];
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", i + 1, j + 1, m(i, j));
            os << buf;
        }
}

// Element-center positions of a transmit array parallel to the x-z plane at
// the given center, matching the element numbering of GridSpec.
inline std::vector<Vec3> array_positions(const GridSpec& grid, const Vec3& center) {
    grid.validate();
    std::vector<Vec3> pos;
    pos.reserve(grid.size());
    for (int m = 1; m <= grid.size(); ++m) {
        const ElementIndex e = invert_index(m, grid);
        const double x = grid.n1 > 1 ? (e.i1 - 1) * grid.w1 / (grid.n1 - 1) - grid.w1 / 2.0 : 0.0;
        const double z = grid.n2 > 1 ? (e.i2 - 1) * grid.w2 / (grid.n2 - 1) - grid.w2 / 2.0 : 0.0;
        pos.push_back(center + Vec3(x, 0.0, z));
    }
    return pos;
}

}  // namespace mfas::em
