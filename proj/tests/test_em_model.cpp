#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "mfas/em_model.hpp"

using namespace mfas;
using namespace mfas::em;

namespace {

constexpr double kK0 = 2.0 * M_PI;
constexpr double kOmega = 2.0 * M_PI * 26.5e9;
constexpr double kMu0 = 4.0e-7 * M_PI;

Complex field_scale() { return Complex(0.0, 1.0) * kOmega * kMu0 / (4.0 * M_PI); }

}  // namespace

TEST_CASE("dipole_field on the dipole axis keeps only the longitudinal term") {
    DipoleSource src{Vec3::Zero(), Complex(1.0, 0.0)};
    const double r = 0.8;
    const DipoleFieldTerms t = dipole_field_terms(src, Vec3(0.0, r, 0.0), kK0, kOmega, kMu0);
    CHECK(t.radiating.norm() == 0.0);  // m x r_hat vanishes
    // remaining terms are 2 m / r^3 (1 - j k r) e^{-j k r}, y-polarized
    const Complex j(0.0, 1.0);
    const Complex expect =
        field_scale() * (1.0 - j * kK0 * r) / (r * r * r) * 2.0 * std::exp(-j * kK0 * r);
    const CVec3 total = t.total();
    CHECK_THAT(std::abs(total.y() - expect), Catch::Matchers::WithinAbs(0.0, 1e-12 * std::abs(expect)));
    CHECK(std::abs(total.x()) == 0.0);
    CHECK(std::abs(total.z()) == 0.0);
}

TEST_CASE("dipole_field transverse to the axis is fully y-polarized") {
    DipoleSource src{Vec3::Zero(), Complex(1.0, 0.0)};
    const double r = 1.3;
    const DipoleFieldTerms t = dipole_field_terms(src, Vec3(r, 0.0, 0.0), kK0, kOmega, kMu0);
    // (m x r_hat) x r_hat = -m y_hat and 3 r_hat (r_hat . m) - m = -m y_hat
    const Complex j(0.0, 1.0);
    const Complex phase = std::exp(-j * kK0 * r);
    CHECK_THAT(std::abs(t.radiating.y() - field_scale() * (kK0 * kK0 / r) * phase * -1.0),
               Catch::Matchers::WithinAbs(0.0, 1e-10));
    CHECK_THAT(std::abs(t.electrostatic.y() - field_scale() / (r * r * r) * phase * -1.0),
               Catch::Matchers::WithinAbs(0.0, 1e-10));
    CHECK(std::abs(t.total().x()) == 0.0);
    CHECK(std::abs(t.total().z()) == 0.0);
}

TEST_CASE("dipole_field decays as 1/r in the far field") {
    DipoleSource src{Vec3::Zero(), Complex(1.0, 0.0)};
    const double r = 200.0 / kK0;  // k0 r = 200
    const double e1 = dipole_field(src, Vec3(r, 0.0, 0.0), kK0, kOmega, kMu0).norm();
    const double e2 = dipole_field(src, Vec3(2.0 * r, 0.0, 0.0), kK0, kOmega, kMu0).norm();
    CHECK_THAT(e1 / e2, Catch::Matchers::WithinRel(2.0, 0.02));

    // fitted log-log slope of |E| vs r
    const double slope = std::log(e2 / e1) / std::log(2.0);
    CHECK_THAT(slope, Catch::Matchers::WithinAbs(-1.0, 0.02));
}

TEST_CASE("static-to-radiating term ratio scales as (k0 r)^-2") {
    DipoleSource src{Vec3::Zero(), Complex(1.0, 0.0)};
    std::vector<double> log_kr, log_ratio;
    for (double kr = 10.0; kr <= 1000.0; kr *= 1.5) {
        const double r = kr / kK0;
        const DipoleFieldTerms t =
            dipole_field_terms(src, Vec3(r, 0.0, 0.0), kK0, kOmega, kMu0);
        log_kr.push_back(std::log(kr));
        log_ratio.push_back(std::log(t.electrostatic.norm() / t.radiating.norm()));
    }
    // least-squares slope
    const int n = static_cast<int>(log_kr.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sx += log_kr[i];
        sy += log_ratio[i];
        sxx += log_kr[i] * log_kr[i];
        sxy += log_kr[i] * log_ratio[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK_THAT(slope, Catch::Matchers::WithinAbs(-2.0, 0.05));
}

TEST_CASE("dipole_field symmetry and linearity") {
    DipoleSource src{Vec3::Zero(), Complex(0.4, -0.9)};
    const Vec3 obs(0.7, 0.4, -0.3);
    const CVec3 e = dipole_field(src, obs, kK0, kOmega, kMu0);

    // mirror in x: the y-component is even
    const CVec3 mirrored = dipole_field(src, Vec3(-obs.x(), obs.y(), obs.z()), kK0, kOmega, kMu0);
    CHECK_THAT(std::abs(e.y() - mirrored.y()), Catch::Matchers::WithinAbs(0.0, 1e-12));

    // linear in the moment
    DipoleSource scaled = src;
    scaled.moment *= Complex(2.0, 1.0);
    const CVec3 es = dipole_field(scaled, obs, kK0, kOmega, kMu0);
    CHECK_THAT((es - Complex(2.0, 1.0) * e).norm(), Catch::Matchers::WithinAbs(0.0, 1e-12 * es.norm()));

    CHECK_THROWS_AS(dipole_field(src, Vec3::Zero(), kK0, kOmega, kMu0), std::domain_error);
}

TEST_CASE("total_field superposition") {
    const DipoleSource d1{Vec3(0.0, -2.0, 0.0), Complex(1.0, 0.0)};
    const DipoleSource d2{Vec3(0.5, -2.0, 0.3), Complex(0.0, 1.0)};
    const Vec3 obs(0.1, 0.2, 0.1);

    TxScene scene;
    scene.transmitters = {{d1}, {d1, d1}, {d1, {d1.position, -d1.moment}}, {d1, d2}};

    const CVec3 single = total_field(scene, 0, obs);
    CHECK((single - dipole_field(d1, obs, scene.k0, scene.omega, scene.mu0)).norm() == 0.0);

    const CVec3 doubled = total_field(scene, 1, obs);
    CHECK_THAT((doubled - 2.0 * single).norm(), Catch::Matchers::WithinAbs(0.0, 1e-12 * doubled.norm()));

    CHECK(total_field(scene, 2, obs).norm() == 0.0);

    const CVec3 pair = total_field(scene, 3, obs);
    const CVec3 sum = single + dipole_field(d2, obs, scene.k0, scene.omega, scene.mu0);
    CHECK_THAT((pair - sum).norm(), Catch::Matchers::WithinAbs(0.0, 1e-12 * sum.norm()));

    CHECK_THROWS_AS(total_field(scene, 4, obs), std::out_of_range);
}

TEST_CASE("te10 mode profile") {
    ApertureGrid grid;
    grid.origin = Vec3(-3.5, 0.0, 0.0);
    const double peak = std::sqrt(2.0 / (grid.d_w * grid.d_h * grid.z10));
    CHECK_THAT(te10_mode(0.0, grid.d_h / 2.0, grid), Catch::Matchers::WithinAbs(peak, 1e-15));
    CHECK_THAT(te10_mode(1.0, 0.0, grid), Catch::Matchers::WithinAbs(0.0, 1e-15));
    CHECK_THAT(te10_mode(1.0, grid.d_h, grid), Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THROWS_AS(te10_mode(4.0, 2.0, grid), std::domain_error);
    CHECK_THROWS_AS(te10_mode(0.0, 4.5, grid), std::domain_error);

    ApertureGrid bad = grid;
    bad.nx = 4;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("te10 quadrature matches the analytic mode norm") {
    ApertureGrid grid;
    grid.origin = Vec3(-3.5, 0.0, 0.0);
    const double dx = grid.d_w / (grid.nx - 1);
    const double dz = grid.d_h / (grid.nz - 1);
    double acc = 0.0;
    for (int iz = 0; iz < grid.nz; ++iz)
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double x = grid.origin.x() + ix * dx;
            const double z = grid.origin.z() + iz * dz;
            const double v = te10_mode(x, z, grid);
            const double wx = (ix == 0 || ix == grid.nx - 1) ? 0.5 : 1.0;
            const double wz = (iz == 0 || iz == grid.nz - 1) ? 0.5 : 1.0;
            acc += v * v * wx * wz;
        }
    acc *= dx * dz;
    CHECK_THAT(acc, Catch::Matchers::WithinRel(1.0 / grid.z10, 1e-4));
}

TEST_CASE("overlap_coefficient") {
    ApertureGrid grid;
    grid.origin = Vec3(-3.5, 0.0, 0.0);

    SECTION("zero field integrates to zero") {
        const Complex b =
            overlap_coefficient([](double, double) { return CVec3::Zero().eval(); }, grid);
        CHECK(b == Complex(0.0, 0.0));
    }
    SECTION("mode-matched field gives the analytic overlap") {
        // E = te10 * y_hat  ->  b = (1/Z10) * integral |te10|^2 = 1/Z10^2
        const Complex b = overlap_coefficient(
            [&](double x, double z) {
                return CVec3(0.0, te10_mode(x, z, grid), 0.0);
            },
            grid);
        CHECK_THAT(b.real(), Catch::Matchers::WithinRel(1.0 / (grid.z10 * grid.z10), 1e-4));
        CHECK(b.imag() == 0.0);
    }
    SECTION("quadrature converges for a nearby dipole") {
        TxScene scene;
        scene.transmitters = {{DipoleSource{Vec3(0.0, -5.0, 2.0), Complex(1.0, 0.0)}}};
        const auto field = [&](double x, double z) {
            return total_field(scene, 0, Vec3(x, 0.0, z));
        };
        CHECK(overlap_convergence(field, grid) < 0.005);
    }
    SECTION("cell decomposition reproduces the full integral exactly") {
        TxScene scene;
        scene.transmitters = {{DipoleSource{Vec3(0.3, -4.0, 1.0), Complex(1.0, 0.0)},
                               DipoleSource{Vec3(-1.0, -4.0, 3.0), Complex(0.0, 1.0)}}};
        const auto field = [&](double x, double z) {
            return total_field(scene, 0, Vec3(x, 0.0, z));
        };
        const GridSpec cells{15, 8, 7.0, 4.0};
        const std::vector<Complex> sums = overlap_cell_sums(field, grid, cells);
        REQUIRE(static_cast<int>(sums.size()) == 120);
        const Complex whole = combine_cell_sums(sums, ActivationPattern::all_on(120));
        const Complex direct = overlap_coefficient(field, grid);
        CHECK_THAT(std::abs(whole - direct), Catch::Matchers::WithinAbs(0.0, 1e-15 + 1e-12 * std::abs(direct)));
    }
}

TEST_CASE("s_parameter") {
    CHECK(s_parameter(Complex(0.0, 0.0), Complex(1.0, 0.0)) == Complex(0.0, 0.0));
    CHECK(s_parameter(Complex(0.0, 0.1), Complex(1.0, 0.0)) == Complex(0.0, 0.1));
    CHECK(s_parameter(Complex(0.2, 0.0), Complex(2.0, 0.0)) == Complex(0.1, 0.0));
    CHECK_THROWS_AS(s_parameter(Complex(1.0, 0.0), Complex(0.0, 0.0)), std::domain_error);
}

TEST_CASE("em_sir") {
    const std::vector<Complex> row{Complex(0.1, 0.0), Complex(std::sqrt(0.001), 0.0),
                                   Complex(0.0, std::sqrt(0.001))};
    CHECK_THAT(em_sir(row, 0), Catch::Matchers::WithinRel(5.0, 1e-12));

    const std::vector<Complex> equal{Complex(0.1, 0.0), Complex(0.0, 0.1), Complex(-0.1, 0.0)};
    CHECK_THAT(em_sir(equal, 1), Catch::Matchers::WithinRel(0.5, 1e-12));

    const std::vector<Complex> dead{Complex(0.0, 0.0), Complex(0.1, 0.0)};
    CHECK(em_sir(dead, 0) == 0.0);

    bool flag = false;
    const std::vector<Complex> solo{Complex(0.5, 0.0)};
    CHECK(em_sir(solo, 0, &flag) == std::numeric_limits<double>::infinity());
    CHECK(flag);
}

TEST_CASE("field_correlation") {
    Eigen::VectorXcd a(4), b(4), c(4);
    a << Complex(1, 0), Complex(0, 1), Complex(-1, 0), Complex(0.5, 0.5);
    b = Complex(0.0, -2.5) * a;  // complex multiple
    c << Complex(0, 0), Complex(0, 0), Complex(1, 0), Complex(0, 0);
    Eigen::VectorXcd d(4);
    d << Complex(0, 1), Complex(2, 0), Complex(0, 0), Complex(0, 0);

    const Eigen::MatrixXd corr = field_correlation({a, b, c, d});
    CHECK(corr(0, 0) == 1.0);
    CHECK(corr(3, 3) == 1.0);
    CHECK_THAT(corr(0, 1), Catch::Matchers::WithinAbs(1.0, 1e-12));  // scale invariant
    CHECK_THAT(corr(2, 3), Catch::Matchers::WithinAbs(0.0, 1e-15));  // disjoint supports
    CHECK(corr.isApprox(corr.transpose(), 1e-15));

    CHECK_THROWS_AS(field_correlation({a, Eigen::VectorXcd::Zero(4)}), std::domain_error);
    CHECK_THROWS_AS(field_correlation({a, Eigen::VectorXcd::Zero(3)}), std::invalid_argument);
}

TEST_CASE("random activation ensembles give diverse near fields") {
    const GridSpec grid{15, 8, 7.0, 4.0};
    const std::vector<Vec3> positions = array_positions(grid, Vec3(0.0, 0.0, 2.0));
    RandomStream rng = RandomStream::substream(77, domain_tag("ensemble"), 0);

    const int patterns = 30;
    const int mx = 32, mz = 16;  // monitoring window lattice
    std::vector<Eigen::VectorXcd> maps;
    maps.reserve(patterns);
    for (int p = 0; p < patterns; ++p) {
        TxScene scene;
        scene.transmitters.resize(1);
        do {
            scene.transmitters[0].clear();
            for (const auto& pos : positions)
                if (rng.bernoulli(0.5))
                    scene.transmitters[0].push_back({pos, Complex(1.0, 0.0)});
        } while (scene.transmitters[0].empty());

        Eigen::VectorXcd map(mx * mz);
        int idx = 0;
        for (int iz = 0; iz < mz; ++iz)
            for (int ix = 0; ix < mx; ++ix) {
                const double x = -3.5 + 7.0 * ix / (mx - 1);
                const double z = 0.0 + 4.0 * iz / (mz - 1);
                map(idx++) = total_field(scene, 0, Vec3(x, 2.0, z)).y();
            }
        maps.push_back(std::move(map));
    }

    const Eigen::MatrixXd corr = field_correlation(maps);
    double off_sum = 0.0;
    int off_count = 0;
    for (int p = 0; p < patterns; ++p) {
        CHECK(corr(p, p) == 1.0);
        for (int q = 0; q < patterns; ++q) {
            if (p == q) continue;
            off_sum += corr(p, q);
            ++off_count;
        }
    }
    CHECK(off_sum / off_count < 0.5);
}
