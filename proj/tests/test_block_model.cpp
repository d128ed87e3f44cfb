#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "mfas/block_model.hpp"

using namespace mfas;

namespace {

// Direct eigensolve of one assembled equicorrelated block.
std::vector<double> block_eigensolve_oracle(int size, double rho) {
    BlockApproximation one;
    one.blocks = {{size, rho}};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(assemble(one), Eigen::EigenvaluesOnly);
    std::vector<double> eig(es.eigenvalues().data(), es.eigenvalues().data() + size);
    std::sort(eig.begin(), eig.end(), std::greater<>());
    return eig;
}

// Exhaustive search over size compositions, the independent oracle for the
// dynamic program inside cbcm_fit.
double cbcm_cost_oracle(const std::vector<double>& eigs_desc, double rho, int d_count, int n) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> sizes(d_count, 1);
    auto cost = [&](const std::vector<int>& ls) {
        double c = 0.0;
        for (int d = 0; d < d_count; ++d) {
            const double t = eigs_desc[d] - ((ls[d] - 1) * rho + 1.0);
            c += t * t;
        }
        return c;
    };
    // enumerate all compositions of n into d_count positive parts
    std::function<void(int, int)> rec = [&](int d, int left) {
        if (d == d_count - 1) {
            if (left >= 1) {
                sizes[d] = left;
                best = std::min(best, cost(sizes));
            }
            return;
        }
        for (int l = 1; left - l >= d_count - 1 - d; ++l) {
            sizes[d] = l;
            rec(d + 1, left - l);
        }
    };
    rec(0, n);
    return best;
}

double cbcm_fit_cost(const CorrelationMatrix& sigma, const BlockApproximation& approx,
                     double rho) {
    std::vector<double> eigs = sorted_eigenvalues(sigma);
    for (double& v : eigs) v /= sigma.sigma2;
    double c = 0.0;
    for (std::size_t d = 0; d < approx.blocks.size(); ++d) {
        const double t = eigs[d] - ((approx.blocks[d].size - 1) * rho + 1.0);
        c += t * t;
    }
    return c;
}

CorrelationMatrix matrix_from_blocks(std::vector<Block> blocks, double sigma2 = 1.0) {
    BlockApproximation a;
    a.blocks = std::move(blocks);
    a.sigma2 = sigma2;
    return {assemble(a), sigma2};
}

}  // namespace

TEST_CASE("block_eigenvalues closed form matches a direct eigensolve") {
    CHECK(block_eigenvalues(1, 0.7) == std::vector<double>{1.0});

    const auto e3 = block_eigenvalues(3, 0.5);
    CHECK_THAT(e3[0], Catch::Matchers::WithinAbs(2.0, 1e-12));
    CHECK_THAT(e3[1], Catch::Matchers::WithinAbs(0.5, 1e-12));
    CHECK_THAT(e3[2], Catch::Matchers::WithinAbs(0.5, 1e-12));

    const auto e4 = block_eigenvalues(4, 0.96);
    CHECK_THAT(e4[0], Catch::Matchers::WithinAbs(3.88, 1e-12));
    for (int i = 1; i < 4; ++i) CHECK_THAT(e4[i], Catch::Matchers::WithinAbs(0.04, 1e-12));

    for (int size : {1, 2, 5, 13, 20})
        for (double rho : {0.0, 0.3, 0.77, 1.0}) {
            auto closed = block_eigenvalues(size, rho);
            std::sort(closed.begin(), closed.end(), std::greater<>());
            const auto numeric = block_eigensolve_oracle(size, rho);
            for (int i = 0; i < size; ++i)
                CHECK_THAT(closed[i], Catch::Matchers::WithinAbs(numeric[i], 1e-9));
            // trace preservation
            double sum = 0.0;
            for (double v : closed) sum += v;
            CHECK_THAT(sum, Catch::Matchers::WithinAbs(static_cast<double>(size), 1e-9));
        }

    CHECK_THROWS_AS(block_eigenvalues(3, -0.1), std::domain_error);
    CHECK_THROWS_AS(block_eigenvalues(3, 1.1), std::domain_error);
    CHECK_THROWS_AS(block_eigenvalues(0, 0.5), std::invalid_argument);
}

TEST_CASE("optimal_rho") {
    const std::vector<double> one{0.4};
    CHECK_THAT(optimal_rho(1.8, one, 2, RhoMode::paper), Catch::Matchers::WithinAbs(0.7, 1e-12));
    CHECK_THAT(optimal_rho(1.8, one, 2, RhoMode::ls_optimal),
               Catch::Matchers::WithinAbs(0.7, 1e-12));

    // identity spectrum needs no correlation
    const std::vector<double> ones{1.0, 1.0};
    CHECK(optimal_rho(1.0, ones, 3, RhoMode::paper) == 0.0);
    CHECK(optimal_rho(1.0, ones, 3, RhoMode::ls_optimal) == 0.0);

    // scalar block convention
    CHECK(optimal_rho(2.0, {}, 1) == 0.0);

    // the two modes coincide exactly at L = 2
    RandomStream rng(5);
    for (int it = 0; it < 100; ++it) {
        const double lam = 2.0 * rng.uniform01();
        const std::vector<double> assigned{rng.uniform01()};
        CHECK(optimal_rho(lam, assigned, 2, RhoMode::paper) ==
              optimal_rho(lam, assigned, 2, RhoMode::ls_optimal));
    }

    // clamping
    const std::vector<double> tiny{0.1};
    CHECK(optimal_rho(5.0, tiny, 2) == 1.0);
    const std::vector<double> big{1.5};
    CHECK(optimal_rho(0.0, big, 2) == 0.0);
}

TEST_CASE("assignment_error") {
    // exact block spectrum gives zero error
    const std::vector<double> exact{0.5, 0.5};
    CHECK(assignment_error(2.0, 0.5, exact, 3) == 0.0);
    CHECK_THAT(assignment_error(2.0, 0.0, exact, 3), Catch::Matchers::WithinAbs(1.5, 1e-12));

    // perfect match built from the closed-form spectrum
    const double rho = 0.73;
    const int l = 5;
    const std::vector<double> rest(l - 1, 1.0 - rho);
    CHECK_THAT(assignment_error(1.0 + (l - 1) * rho, rho, rest, l),
               Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("cbcm_fit dynamic program matches exhaustive composition search") {
    RandomStream rng(17);
    for (int it = 0; it < 30; ++it) {
        const int n = 4 + static_cast<int>(rng.uniform01() * 7);  // 4..10
        const int d = 1 + static_cast<int>(rng.uniform01() * 3);  // 1..3
        // random spectrum via a random block matrix
        std::vector<Block> blocks;
        int left = n;
        while (left > 0) {
            const int size = 1 + static_cast<int>(rng.uniform01() * left);
            blocks.push_back({size, rng.uniform01()});
            left -= size;
        }
        const CorrelationMatrix sigma = matrix_from_blocks(std::move(blocks));
        const double rho = 0.96;

        const BlockApproximation fit = cbcm_fit(sigma, rho, d);
        REQUIRE(fit.total_size() == n);
        REQUIRE(fit.block_count() == d);

        std::vector<double> eigs = sorted_eigenvalues(sigma);
        const double oracle = cbcm_cost_oracle(eigs, rho, d, n);
        CHECK_THAT(cbcm_fit_cost(sigma, fit, rho), Catch::Matchers::WithinAbs(oracle, 1e-10));
    }
}

TEST_CASE("cbcm_fit exact two-element case") {
    // eigenvalues {1.96, 0.04}; one block of size 2 at rho 0.96 matches exactly
    const CorrelationMatrix sigma = matrix_from_blocks({{2, 0.96}});
    const BlockApproximation fit = cbcm_fit(sigma, 0.96, 1);
    REQUIRE(fit.block_count() == 1);
    CHECK(fit.blocks[0].size == 2);
    CHECK_THAT(eigen_approx_error(sigma, fit), Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THROWS_AS(cbcm_fit(sigma, 0.96, 3), std::invalid_argument);
    CHECK_THROWS_AS(cbcm_fit(sigma, 1.5, 1), std::domain_error);
}

TEST_CASE("cbcm_fit on identity spreads sizes evenly") {
    CorrelationMatrix eye{Eigen::MatrixXd::Identity(6, 6), 1.0};
    const BlockApproximation fit = cbcm_fit(eye, 0.96, 3);
    // cost = sum ((L_d-1) rho)^2, minimized by sizes as equal as possible
    std::vector<int> sizes;
    for (const auto& b : fit.blocks) sizes.push_back(b.size);
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<int>{2, 2, 2});
}

TEST_CASE("vbcm_fit recovers an exact block structure") {
    // all-pair blocks with distinct coefficients: the greedy assignment finds
    // each eigenvalue's own block exactly
    const std::vector<Block> truth{{2, 0.9}, {2, 0.7}, {2, 0.5}, {2, 0.2}};
    const CorrelationMatrix sigma = matrix_from_blocks(std::vector<Block>(truth));
    for (const RhoMode mode : {RhoMode::paper, RhoMode::ls_optimal}) {
        const BlockApproximation fit = vbcm_fit(sigma, 4, mode);
        REQUIRE(fit.total_size() == 8);
        CHECK(eigen_approx_error(sigma, fit) <= 1e-9);
        std::vector<double> rhos;
        for (const auto& b : fit.blocks) {
            CHECK(b.size == 2);
            rhos.push_back(b.rho);
        }
        std::sort(rhos.begin(), rhos.end(), std::greater<>());
        for (std::size_t i = 0; i < truth.size(); ++i)
            CHECK_THAT(rhos[i], Catch::Matchers::WithinAbs(truth[i].rho, 1e-9));
    }
}

TEST_CASE("vbcm_fit identity with maximal block count") {
    CorrelationMatrix eye{Eigen::MatrixXd::Identity(5, 5), 1.0};
    const BlockApproximation fit = vbcm_fit(eye, 5);
    for (const auto& b : fit.blocks) {
        CHECK(b.size == 1);
        CHECK(b.rho == 0.0);
    }
    CHECK(eigen_approx_error(eye, fit) == 0.0);
    CHECK_THROWS_AS(vbcm_fit(eye, 6), std::invalid_argument);
}

TEST_CASE("vbcm_fit keeps the trace") {
    const CorrelationMatrix sigma =
        build_jakes_correlation(GridSpec{4, 3, 1.5, 1.0}, 1.0);
    for (int d : {1, 3, 6}) {
        const BlockApproximation fit = vbcm_fit(sigma, d, RhoMode::ls_optimal);
        CHECK(fit.total_size() == 12);
        double sum = 0.0;
        for (double v : approx_eigenvalues(fit)) sum += v;
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(12.0, 1e-9));
        for (const auto& b : fit.blocks) {
            CHECK(b.rho >= 0.0);
            CHECK(b.rho <= 1.0);
        }
    }
}

TEST_CASE("eigen_approx_error") {
    const CorrelationMatrix sigma = matrix_from_blocks({{3, 0.5}, {2, 0.8}});
    BlockApproximation exact;
    exact.blocks = {{3, 0.5}, {2, 0.8}};
    CHECK_THAT(eigen_approx_error(sigma, exact), Catch::Matchers::WithinAbs(0.0, 1e-18));

    CorrelationMatrix eye{Eigen::MatrixXd::Identity(2, 2), 1.0};
    BlockApproximation pair;
    pair.blocks = {{2, 0.5}};
    CHECK_THAT(eigen_approx_error(eye, pair), Catch::Matchers::WithinAbs(0.5, 1e-12));

    BlockApproximation wrong_size;
    wrong_size.blocks = {{3, 0.5}};
    CHECK_THROWS_AS(eigen_approx_error(eye, wrong_size), std::invalid_argument);
}

TEST_CASE("split_spectrum separates dominant and remaining eigenvalues") {
    const std::vector<double> desc{5.0, 3.0, 1.0, 0.5, 0.25};
    const EigenSplit split = split_spectrum(desc, 2);
    CHECK(split.dominant == std::vector<double>{5.0, 3.0});
    CHECK(split.remaining == std::vector<double>{1.0, 0.5, 0.25});
    CHECK_THROWS_AS(split_spectrum(desc, 0), std::invalid_argument);
    CHECK_THROWS_AS(split_spectrum(desc, 6), std::invalid_argument);
}

TEST_CASE("choose_block_count uses the trace-energy rule") {
    const std::vector<double> spectrum{8.0, 1.0, 0.5, 0.3, 0.2};  // trace 10
    CHECK(choose_block_count(spectrum, 0.80) == 1);
    CHECK(choose_block_count(spectrum, 0.90) == 2);
    CHECK(choose_block_count(spectrum, 0.95) == 3);
    CHECK(choose_block_count(spectrum, 1.00) == 5);
}

TEST_CASE("effective_variance blockwise equals the dense quadratic form") {
    RandomStream rng(23);
    BlockApproximation approx;
    approx.sigma2 = 1.7;
    approx.blocks = {{4, 0.96}, {3, 0.4}, {2, 0.0}, {1, 0.0}, {5, 0.85}};
    const int n = approx.total_size();
    const CorrelationMatrix dense{assemble(approx), approx.sigma2};

    for (int it = 0; it < 1000; ++it) {
        const ActivationPattern omega = random_pattern(rng, 0.4, n);
        const double blockwise = effective_variance(approx, omega);
        const double direct = effective_variance(dense, omega);
        CHECK_THAT(blockwise / direct, Catch::Matchers::WithinAbs(1.0, 1e-10));
    }
}

TEST_CASE("effective_variance special cases") {
    BlockApproximation approx;
    approx.sigma2 = 2.0;
    approx.blocks = {{2, 1.0}, {2, 0.3}};

    // single active element
    CHECK(effective_variance(approx, ActivationPattern::single(2, 4)) == 2.0);

    // two active elements inside a fully correlated block: (1 + 1 + 2 rho)
    CHECK(effective_variance(approx, ActivationPattern::from_mask(0b0011, 4)) == 8.0);

    // length mismatch
    CHECK_THROWS_AS(effective_variance(approx, ActivationPattern::single(0, 3)),
                    std::invalid_argument);
}

TEST_CASE("effective_variance is monotone in rho") {
    BlockApproximation lo, hi;
    lo.blocks = {{4, 0.2}};
    hi.blocks = {{4, 0.9}};
    RandomStream rng(29);
    for (int it = 0; it < 100; ++it) {
        const ActivationPattern omega = random_pattern(rng, 0.5, 4);
        CHECK(effective_variance(hi, omega) >= effective_variance(lo, omega));
    }
}

TEST_CASE("blocks csv export") {
    BlockApproximation approx;
    approx.blocks = {{3, 0.5}, {1, 0.0}};
    std::ostringstream oss;
    write_blocks_csv(approx, oss);
    CHECK(oss.str() == "d,L_d,rho_d\n1,3,0.5\n2,1,0\n");
}
