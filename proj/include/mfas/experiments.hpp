#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mfas/analytics.hpp"
#include "mfas/block_model.hpp"
#include "mfas/config.hpp"
#include "mfas/correlation.hpp"
#include "mfas/csv.hpp"
#include "mfas/em_model.hpp"
#include "mfas/fama.hpp"
#include "mfas/version.hpp"

namespace mfas {

// Trials are distributed over a small worker pool. Each trial derives its own
// substream from (seed, domain, trial) and writes its own result slot, so the
// output is independent of scheduling and thread count.
inline void parallel_trials(int count, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int t = 0; t < count; ++t) body(t);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (int t = next.fetch_add(1); t < count; t = next.fetch_add(1)) body(t);
        });
    for (auto& th : pool) th.join();
}

// 95% half-width for a binomial proportion (Wilson score form, which stays
// meaningful at proportions of exactly 0 or 1 and for tiny sample counts).
inline double binomial_ci_halfwidth(double p_hat, int trials) {
    const double z = 1.96;
    const double z2 = z * z;
    const double n = trials;
    return z / (1.0 + z2 / n) *
           std::sqrt(std::max(0.0, p_hat * (1.0 - p_hat)) / n + z2 / (4.0 * n * n));
}

namespace detail {

inline std::vector<std::string> standard_meta(const char* experiment,
                                              const ExperimentConfig& cfg) {
    return {std::string("experiment: ") + experiment, std::string("tool: ") + kToolVersion,
            "seed: " + std::to_string(cfg.seed), "config: " + config_to_json(cfg).dump()};
}

// Desired user in row 0. With shared_correlation the interferers see the
// same correlation as the desired link; otherwise they fade independently
// per element.
inline MultiUserChannel sample_experiment_channels(const ChannelFactor& factor, int u_count,
                                                   double sigma2, bool shared_correlation,
                                                   RandomStream& rng) {
    if (shared_correlation) return sample_channels(factor, u_count, rng);
    const int n = factor.size();
    Eigen::MatrixXcd h(u_count, n);
    Eigen::VectorXcd g(n);
    for (int i = 0; i < n; ++i) g(i) = rng.complex_normal();
    h.row(0) = (factor.factor * g).transpose();
    const double scale = std::sqrt(sigma2);
    for (int u = 1; u < u_count; ++u)
        for (int i = 0; i < n; ++i) h(u, i) = scale * rng.complex_normal();
    return {std::move(h)};
}

// SIR of user u for the active set in bits, reusing the z accumulator.
inline double pattern_sir(const std::vector<std::uint8_t>& bits, int active,
                          const Eigen::MatrixXcd& h, int u, double noise_ratio,
                          Eigen::VectorXcd& z) {
    z.setZero();
    for (int i = 0; i < static_cast<int>(bits.size()); ++i)
        if (bits[i]) z += h.col(i);
    double interference = 0.0;
    for (int j = 0; j < z.size(); ++j)
        if (j != u) interference += std::norm(z(j));
    const double denom = interference + active * noise_ratio;
    if (denom == 0.0) return kInfiniteSir;
    return std::norm(z(u)) / denom;
}

}  // namespace detail

// Outage and multiplexing gain of the random-search selector versus the
// pattern budget p, for each configured user count. A single stream of
// p_max patterns per trial is scanned once; the best SIR after the first p
// draws is recorded at every checkpoint in p_list, which matches running the
// selector with that budget (curve runs do not early-stop, so the running
// maximum at p is exactly the selector output).
inline ResultTable run_outage_vs_p(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.model != "jakes")
        throw ConfigError("run_outage_vs_p: requires model = jakes");

    std::vector<int> ps = cfg.p_list;
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
    if (ps.front() < 1) throw ConfigError("run_outage_vs_p: pattern budgets must be >= 1");
    const int p_last = ps.back();
    const int checkpoints = static_cast<int>(ps.size());

    const CorrelationMatrix sigma = build_jakes_correlation(cfg.grid, cfg.sigma2);
    const ChannelFactor factor = factorize(sigma);
    const double gamma_lin = db_to_linear(cfg.gamma_th_db);
    const int n = cfg.grid.size();

    ResultTable table;
    table.meta = detail::standard_meta("outage_vs_p", cfg);
    table.columns = {"u", "p", "gamma_db", "outage", "ci_halfwidth", "multiplexing_gain",
                     "trials"};

    for (int u_count : cfg.u_list) {
        std::vector<double> best_at(static_cast<std::size_t>(cfg.trials) * checkpoints);
        parallel_trials(cfg.trials, cfg.threads, [&](int t) {
            RandomStream rng = RandomStream::substream(
                cfg.seed, domain_tag("outage_vs_p") + static_cast<std::uint64_t>(u_count), t);
            const MultiUserChannel ch = detail::sample_experiment_channels(
                factor, u_count, cfg.sigma2, cfg.shared_correlation, rng);
            std::vector<std::uint8_t> bits(n);
            Eigen::VectorXcd z(u_count);
            double best = -kInfiniteSir;
            int cp = 0;
            for (int i = 1; i <= p_last; ++i) {
                const int active = random_pattern_into(rng, cfg.q, bits);
                const double s = detail::pattern_sir(bits, active, ch.h, 0,
                                                     cfg.noise_to_signal, z);
                if (s >= best) best = s;
                while (cp < checkpoints && i == ps[cp]) {
                    best_at[static_cast<std::size_t>(t) * checkpoints + cp] = best;
                    ++cp;
                }
            }
        });
        for (int c = 0; c < checkpoints; ++c) {
            int failures = 0;
            for (int t = 0; t < cfg.trials; ++t)
                if (best_at[static_cast<std::size_t>(t) * checkpoints + c] < gamma_lin)
                    ++failures;
            const double outage = static_cast<double>(failures) / cfg.trials;
            table.add_row({static_cast<double>(u_count), static_cast<double>(ps[c]),
                           cfg.gamma_th_db, outage, binomial_ci_halfwidth(outage, cfg.trials),
                           u_count * (1.0 - outage), static_cast<double>(cfg.trials)});
        }
    }
    return table;
}

namespace detail {

// Per-trial best SIR of each scheme under identical channel draws. The
// multi-activation pattern stream follows the channel draw on the same
// substream, so results are paired across schemes.
struct PairedSelectionSirs {
    std::vector<double> multi, slow, mrc;
};

inline PairedSelectionSirs paired_selection_sirs(const ExperimentConfig& cfg) {
    const CorrelationMatrix sigma = build_jakes_correlation(cfg.grid, cfg.sigma2);
    const ChannelFactor factor = factorize(sigma);
    const int n = cfg.grid.size();
    const int u_count = cfg.u_count;

    PairedSelectionSirs out;
    out.multi.resize(cfg.trials);
    out.slow.resize(cfg.trials);
    out.mrc.resize(cfg.trials);
    parallel_trials(cfg.trials, cfg.threads, [&](int t) {
        RandomStream rng = RandomStream::substream(cfg.seed, domain_tag("outage_vs_gamma"), t);
        const MultiUserChannel ch = sample_experiment_channels(
            factor, u_count, cfg.sigma2, cfg.shared_correlation, rng);
        std::vector<std::uint8_t> bits(n);
        Eigen::VectorXcd z(u_count);
        double best = -kInfiniteSir;
        for (int i = 0; i < cfg.p_max; ++i) {
            const int active = random_pattern_into(rng, cfg.q, bits);
            best = std::max(best,
                            pattern_sir(bits, active, ch.h, 0, cfg.noise_to_signal, z));
        }
        out.multi[t] = best;
        out.slow[t] = slow_fama_select(ch, 0, cfg.noise_to_signal).sir;
        out.mrc[t] = mrc_baseline_select(ch, 0, 1, cfg.noise_to_signal).sir;
    });
    return out;
}

}  // namespace detail

// Outage versus SIR threshold for the multi-activation selector and the
// single-RF-chain baselines. All schemes see identical channel draws, so the
// comparison is paired.
inline ResultTable run_outage_vs_gamma(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.model != "jakes")
        throw ConfigError("run_outage_vs_gamma: requires model = jakes");

    const bool want_multi =
        std::count(cfg.baselines.begin(), cfg.baselines.end(), "multi_activation") > 0;
    const bool want_slow =
        std::count(cfg.baselines.begin(), cfg.baselines.end(), "slow_fama") > 0;
    const bool want_mrc = std::count(cfg.baselines.begin(), cfg.baselines.end(), "mrc") > 0;

    const detail::PairedSelectionSirs sirs = detail::paired_selection_sirs(cfg);
    const std::vector<double>& multi = sirs.multi;
    const std::vector<double>& slow = sirs.slow;
    const std::vector<double>& mrc = sirs.mrc;

    ResultTable table;
    table.meta = detail::standard_meta("outage_vs_gamma", cfg);
    table.columns = {"gamma_db"};
    if (want_multi) {
        table.columns.push_back("outage_multi_activation");
        table.columns.push_back("ci_multi_activation");
    }
    if (want_slow) {
        table.columns.push_back("outage_slow_fama");
        table.columns.push_back("ci_slow_fama");
    }
    if (want_mrc) {
        table.columns.push_back("outage_mrc");
        table.columns.push_back("ci_mrc");
    }
    auto outage_of = [&](const std::vector<double>& best, double gamma_lin) {
        int failures = 0;
        for (double b : best)
            if (b < gamma_lin) ++failures;
        return static_cast<double>(failures) / cfg.trials;
    };
    for (double gamma_db : cfg.gamma_db_list) {
        const double gamma_lin = db_to_linear(gamma_db);
        std::vector<double> row{gamma_db};
        for (const auto* scheme : {want_multi ? &multi : nullptr, want_slow ? &slow : nullptr,
                                   want_mrc ? &mrc : nullptr}) {
            if (!scheme) continue;
            const double o = outage_of(*scheme, gamma_lin);
            row.push_back(o);
            row.push_back(binomial_ci_halfwidth(o, cfg.trials));
        }
        table.add_row(std::move(row));
    }
    return table;
}

// Validation of the closed-form SIR law against direct sampling of the
// signal/interference power distributions, plus the multiplexing-gain
// counterpart.
struct AnalyticalValidation {
    ResultTable outage;  // U x threshold scenarios with squared errors
    ResultTable mgain;   // multiplexing gain over the threshold grid
    double mse = 0.0;    // mean squared outage error over all scenarios
};

inline AnalyticalValidation run_analytical_validation(const ExperimentConfig& cfg,
                                                      int draws_override = 0) {
    cfg.validate();
    const int draws = draws_override > 0 ? draws_override : 50000;
    const double omega_u = 1.0;  // interference-limited law is scale-free
    const double c = 0.0;

    AnalyticalValidation out;
    out.outage.meta = detail::standard_meta("analytical_validation", cfg);
    out.outage.meta.push_back("draws: " + std::to_string(draws));
    out.outage.columns = {"u", "gamma_db", "outage_mc", "outage_analytic", "sq_error",
                          "ci_halfwidth"};

    const std::vector<double> gammas_db{3.0, 5.0, 7.0, 10.0};
    double sq_sum = 0.0;
    int scenarios = 0;
    for (int u = 2; u <= 8; ++u) {
        SystemParams params{u, 1.0, 0.0};
        const SirDistribution dist = make_sir_distribution(omega_u, params, 1);
        for (std::size_t gi = 0; gi < gammas_db.size(); ++gi) {
            RandomStream rng = RandomStream::substream(
                cfg.seed, domain_tag("analytic_outage") + 100 * u + gi, 0);
            const double gamma_lin = db_to_linear(gammas_db[gi]);
            int failures = 0;
            for (int d = 0; d < draws; ++d)
                if (sample_sir(omega_u, u, c, rng) < gamma_lin) ++failures;
            const double mc = static_cast<double>(failures) / draws;
            const double analytic = outage_probability(dist, gamma_lin);
            const double sq = (mc - analytic) * (mc - analytic);
            sq_sum += sq;
            ++scenarios;
            out.outage.add_row({static_cast<double>(u), gammas_db[gi], mc, analytic, sq,
                                binomial_ci_halfwidth(mc, draws)});
        }
    }
    out.mse = sq_sum / scenarios;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", out.mse);
    out.outage.meta.push_back(std::string("mse: ") + buf);

    out.mgain.meta = detail::standard_meta("multiplexing_gain_validation", cfg);
    out.mgain.meta.push_back("draws: " + std::to_string(draws));
    out.mgain.columns = {"u", "gamma_db", "mgain_mc", "mgain_analytic", "abs_error"};
    for (int u = 2; u <= 6; ++u) {
        SystemParams params{u, 1.0, 0.0};
        const SirDistribution dist = make_sir_distribution(omega_u, params, 1);
        for (std::size_t gi = 0; gi < cfg.gamma_db_list.size(); ++gi) {
            RandomStream rng = RandomStream::substream(
                cfg.seed, domain_tag("analytic_mgain") + 100 * u + gi, 0);
            const double gamma_lin = db_to_linear(cfg.gamma_db_list[gi]);
            int failures = 0;
            for (int d = 0; d < draws; ++d)
                if (sample_sir(omega_u, u, c, rng) < gamma_lin) ++failures;
            const double mc_gain = u * (1.0 - static_cast<double>(failures) / draws);
            const double analytic = multiplexing_gain(params, gamma_lin, dist);
            out.mgain.add_row({static_cast<double>(u), cfg.gamma_db_list[gi], mc_gain, analytic,
                               std::abs(mc_gain - analytic)});
        }
    }
    return out;
}

// Cross-model comparison: outage of best-of-p selection under (a) Jakes
// channel sampling and (b) the dipole/overlap EM model, over a common
// threshold grid. Each scene is one fading-generator realization; the
// receiver tries `distributions` activation patterns and keeps the best SIR.
struct EmVsJakesResult {
    ResultTable table;
    double max_gap = 0.0;
};

namespace detail {

// Best-of-p SIR per scene under Jakes channel sampling.
inline std::vector<double> jakes_best_sirs(const ExperimentConfig& cfg, int scenes, int dists) {
    const CorrelationMatrix sigma = build_jakes_correlation(cfg.grid, cfg.sigma2);
    const ChannelFactor factor = factorize(sigma);
    const int n = cfg.grid.size();
    std::vector<double> best_sir(scenes);
    parallel_trials(scenes, cfg.threads, [&](int s) {
        RandomStream rng = RandomStream::substream(cfg.seed, domain_tag("em_vs_jakes/jakes"), s);
        const MultiUserChannel ch = sample_experiment_channels(
            factor, cfg.u_count, cfg.sigma2, cfg.shared_correlation, rng);
        std::vector<std::uint8_t> bits(n);
        Eigen::VectorXcd z(cfg.u_count);
        double best = -kInfiniteSir;
        for (int i = 0; i < dists; ++i) {
            const int active = random_pattern_into(rng, cfg.q, bits);
            best = std::max(best, pattern_sir(bits, active, ch.h, 0, 0.0, z));
        }
        best_sir[s] = best;
    });
    return best_sir;
}

// Receive aperture matching the element grid, in the plane y = 0.
inline em::ApertureGrid experiment_aperture(const ExperimentConfig& cfg) {
    em::ApertureGrid aperture;
    aperture.origin = em::Vec3(-cfg.grid.w1 / 2.0, 0.0, 0.0);
    aperture.d_w = cfg.grid.w1;
    aperture.d_h = cfg.grid.w2;
    aperture.nx = cfg.em.nx;
    aperture.nz = cfg.em.nz;
    aperture.z10 = cfg.em.z10;
    return aperture;
}

// One random fading-generator scene: per transmitter, a random dipole subset
// of an array facing the aperture at the configured standoff.
inline std::vector<std::vector<em::DipoleSource>> draw_em_scene(const ExperimentConfig& cfg,
                                                                RandomStream& rng) {
    std::vector<std::vector<em::DipoleSource>> transmitters(cfg.u_count);
    for (int j = 0; j < cfg.u_count; ++j) {
        const double x_off = (j - (cfg.u_count - 1) / 2.0) * cfg.em.tx_spacing;
        const em::Vec3 center(x_off, -cfg.em.tx_distance, cfg.grid.w2 / 2.0);
        const std::vector<em::Vec3> positions = em::array_positions(cfg.grid, center);
        do {
            transmitters[j].clear();
            for (const auto& pos : positions)
                if (rng.bernoulli(cfg.em.tx_q))
                    transmitters[j].push_back({pos, em::Complex(1.0, 0.0)});
        } while (transmitters[j].empty());
    }
    return transmitters;
}

// Best-of-p S-parameter SIR per scene under the dipole/overlap model.
inline std::vector<double> em_best_sirs(const ExperimentConfig& cfg, int scenes, int dists) {
    const em::ApertureGrid aperture = experiment_aperture(cfg);
    const int n = cfg.grid.size();
    std::vector<double> best_sir(scenes);
    parallel_trials(scenes, cfg.threads, [&](int s) {
        RandomStream rng = RandomStream::substream(cfg.seed, domain_tag("em_vs_jakes/em"), s);
        const auto transmitters = draw_em_scene(cfg, rng);
        std::vector<std::vector<em::Complex>> cell_sums(cfg.u_count);
        for (int j = 0; j < cfg.u_count; ++j) {
            em::TxScene scene;
            scene.transmitters = {transmitters[j]};
            cell_sums[j] = em::overlap_cell_sums(
                [&](double x, double z) {
                    return em::total_field(scene, 0, em::Vec3(x, aperture.origin.y(), z));
                },
                aperture, cfg.grid);
        }
        std::vector<std::uint8_t> bits(n);
        std::vector<em::Complex> s_row(cfg.u_count);
        double best = -kInfiniteSir;
        for (int i = 0; i < dists; ++i) {
            random_pattern_into(rng, cfg.q, bits);
            for (int j = 0; j < cfg.u_count; ++j) {
                em::Complex b = 0.0;
                for (int m = 0; m < n; ++m)
                    if (bits[m]) b += cell_sums[j][m];
                s_row[j] = b;
            }
            best = std::max(best, em::em_sir(s_row, 0));
        }
        best_sir[s] = best;
    });
    return best_sir;
}

inline double empirical_outage(const std::vector<double>& best, double gamma_lin) {
    int failures = 0;
    for (double b : best)
        if (b < gamma_lin) ++failures;
    return static_cast<double>(failures) / static_cast<double>(best.size());
}

}  // namespace detail

inline EmVsJakesResult run_em_vs_jakes(const ExperimentConfig& cfg) {
    cfg.validate();
    const int scenes = cfg.em.scenes;
    const int dists = cfg.em.distributions;

    const std::vector<double> best_jakes = detail::jakes_best_sirs(cfg, scenes, dists);
    const std::vector<double> best_em = detail::em_best_sirs(cfg, scenes, dists);

    EmVsJakesResult result;
    result.table.meta = detail::standard_meta("em_vs_jakes", cfg);
    result.table.columns = {"gamma_db", "outage_jakes", "ci_jakes", "outage_em", "ci_em", "gap"};
    for (double gamma_db : cfg.gamma_db_list) {
        const double gamma_lin = db_to_linear(gamma_db);
        const double oj = detail::empirical_outage(best_jakes, gamma_lin);
        const double oe = detail::empirical_outage(best_em, gamma_lin);
        const double gap = std::abs(oe - oj);
        result.max_gap = std::max(result.max_gap, gap);
        result.table.add_row({gamma_db, oj, binomial_ci_halfwidth(oj, scenes), oe,
                              binomial_ci_halfwidth(oe, scenes), gap});
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", result.max_gap);
    result.table.meta.push_back(std::string("max_gap: ") + buf);
    return result;
}

// EM leg alone: per-scene best S-parameter SIR and the resulting outage
// curve.
inline ResultTable run_em_outage(const ExperimentConfig& cfg) {
    cfg.validate();
    const int scenes = cfg.em.scenes;
    const std::vector<double> best_em = detail::em_best_sirs(cfg, scenes, cfg.em.distributions);

    ResultTable table;
    table.meta = detail::standard_meta("em_outage", cfg);
    table.columns = {"gamma_db", "outage_em", "ci_em"};
    for (double gamma_db : cfg.gamma_db_list) {
        const double o = detail::empirical_outage(best_em, db_to_linear(gamma_db));
        table.add_row({gamma_db, o, binomial_ci_halfwidth(o, scenes)});
    }
    return table;
}

// Per-trial selector runs with early termination: one row per trial with the
// achieved SIR and the number of SIR evaluations spent.
inline ResultTable run_selection_trials(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.model != "jakes")
        throw ConfigError("run_selection_trials: requires model = jakes");
    const CorrelationMatrix sigma = build_jakes_correlation(cfg.grid, cfg.sigma2);
    const ChannelFactor factor = factorize(sigma);
    const double gamma_lin = db_to_linear(cfg.gamma_th_db);

    struct Row {
        double sir;
        int used;
        bool early;
    };
    std::vector<Row> rows(cfg.trials);
    parallel_trials(cfg.trials, cfg.threads, [&](int t) {
        RandomStream rng = RandomStream::substream(cfg.seed, domain_tag("selection_trials"), t);
        const MultiUserChannel ch = detail::sample_experiment_channels(
            factor, cfg.u_count, cfg.sigma2, cfg.shared_correlation, rng);
        const SelectionResult res = fast_multi_activation_select(
            ch, 0, cfg.p_max, gamma_lin, cfg.noise_to_signal, rng, cfg.q);
        rows[t] = {res.sir, res.iterations_used, res.early_stopped};
    });

    ResultTable table;
    table.meta = detail::standard_meta("selection_trials", cfg);
    table.columns = {"trial", "sir_linear", "sir_db", "iterations_used", "early_stopped"};
    for (int t = 0; t < cfg.trials; ++t)
        table.add_row({static_cast<double>(t), rows[t].sir, linear_to_db(rows[t].sir),
                       static_cast<double>(rows[t].used), rows[t].early ? 1.0 : 0.0});
    return table;
}

}  // namespace mfas
