// Command-line front end: config handling, experiment dispatch, CSV output.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfas/analytics.hpp"
#include "mfas/block_model.hpp"
#include "mfas/config.hpp"
#include "mfas/correlation.hpp"
#include "mfas/csv.hpp"
#include "mfas/em_model.hpp"
#include "mfas/experiments.hpp"
#include "mfas/version.hpp"

namespace {

using namespace mfas;
namespace fs = std::filesystem;

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool full = false;
};

ExperimentConfig build_config(const GlobalOpts& opts) {
    nlohmann::json doc = opts.config_path.empty() ? nlohmann::json::object()
                                                  : load_json_file(opts.config_path);
    for (const auto& ov : opts.overrides) apply_override(doc, ov);
    ExperimentConfig cfg = parse_config(doc);
    if (opts.seed_set) cfg.seed = opts.seed;
    if (opts.threads > 0) cfg.threads = opts.threads;
    return cfg;
}

fs::path prepare_out(const GlobalOpts& opts) {
    fs::path dir(opts.out_dir);
    fs::create_directories(dir);
    return dir;
}

void parse_pair(const std::string& text, const char* what, double& a, double& b) {
    const auto x = text.find('x');
    if (x == std::string::npos)
        throw ConfigError(std::string("expected <a>x<b> for ") + what + ", got '" + text + "'");
    try {
        a = std::stod(text.substr(0, x));
        b = std::stod(text.substr(x + 1));
    } catch (const std::exception&) {
        throw ConfigError(std::string("cannot parse ") + what + " '" + text + "'");
    }
}

GridSpec grid_from_args(const std::string& grid_arg, const std::string& aperture_arg) {
    GridSpec grid;
    if (!grid_arg.empty()) {
        double a = 0, b = 0;
        parse_pair(grid_arg, "--grid", a, b);
        grid.n1 = static_cast<int>(a);
        grid.n2 = static_cast<int>(b);
    }
    if (!aperture_arg.empty()) parse_pair(aperture_arg, "--aperture", grid.w1, grid.w2);
    grid.validate();
    return grid;
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(Clock::now() - start_).count();
    }

private:
    using Clock = std::chrono::steady_clock;
    Clock::time_point start_ = Clock::now();
};

void emit(const ResultTable& table, const fs::path& path, double seconds) {
    write_result_files(table, path, kToolVersion, seconds);
    std::cerr << "[mfas] wrote " << path.string() << "\n";
}

int run_correlation(const GlobalOpts& opts, const std::string& grid_arg,
                    const std::string& aperture_arg, double sigma2) {
    const GridSpec grid = grid_from_args(grid_arg, aperture_arg);
    const fs::path dir = prepare_out(opts);
    const CorrelationMatrix sigma = build_jakes_correlation(grid, sigma2);
    std::ofstream out(dir / "correlation.csv");
    if (!out) throw std::runtime_error("cannot open output file");
    write_correlation_csv(sigma, out);
    std::cerr << "[mfas] wrote " << (dir / "correlation.csv").string() << "\n";
    return 0;
}

int run_block_approx(const GlobalOpts& opts, const std::string& grid_arg,
                     const std::string& aperture_arg, const std::string& d_arg, double rho,
                     const std::string& mode_arg, double energy) {
    const GridSpec grid = grid_from_args(grid_arg, aperture_arg);

    RhoMode mode;
    if (mode_arg == "paper")
        mode = RhoMode::paper;
    else if (mode_arg == "ls_optimal")
        mode = RhoMode::ls_optimal;
    else
        throw ConfigError("--mode must be 'paper' or 'ls_optimal'");

    const CorrelationMatrix sigma = build_jakes_correlation(grid, 1.0);
    int d_count;
    if (d_arg == "auto") {
        d_count = choose_block_count(sorted_eigenvalues(sigma), energy);
    } else {
        try {
            d_count = std::stoi(d_arg);
        } catch (const std::exception&) {
            throw ConfigError("--d must be 'auto' or a positive integer, got '" + d_arg + "'");
        }
    }

    const BlockApproximation cbcm = cbcm_fit(sigma, rho, d_count);
    const BlockApproximation vbcm = vbcm_fit(sigma, d_count, mode);
    const double cbcm_err = eigen_approx_error(sigma, cbcm);
    const double vbcm_err = eigen_approx_error(sigma, vbcm);

    const fs::path dir = prepare_out(opts);
    {
        std::ofstream out(dir / "blocks_cbcm.csv");
        write_blocks_csv(cbcm, out);
    }
    {
        std::ofstream out(dir / "blocks_vbcm.csv");
        write_blocks_csv(vbcm, out);
    }
    char line[256];
    std::snprintf(line, sizeof line, "d=%d cbcm_error=%.17g vbcm_error=%.17g\n", d_count,
                  cbcm_err, vbcm_err);
    std::cout << line;
    std::cerr << "[mfas] wrote " << (dir / "blocks_cbcm.csv").string() << " and "
              << (dir / "blocks_vbcm.csv").string() << "\n";
    return 0;
}

int run_outage_tables(const GlobalOpts& opts, double omega, int active) {
    const ExperimentConfig cfg = build_config(opts);
    SystemParams params{cfg.u_count, 1.0, cfg.noise_to_signal};
    const SirDistribution dist = make_sir_distribution(omega, params, active);

    ResultTable table;
    table.meta = {"experiment: outage_closed_form", std::string("tool: ") + kToolVersion,
                  "config: " + config_to_json(cfg).dump()};
    table.columns = {"gamma_db", "outage", "multiplexing_gain"};
    for (double db : cfg.gamma_db_list) {
        const double g = db_to_linear(db);
        const double o = outage_probability(dist, g);
        table.add_row({db, o, cfg.u_count * (1.0 - o)});
    }
    Timer timer;
    emit(table, prepare_out(opts) / "outage_closed_form.csv", timer.seconds());
    return 0;
}

int run_fama_sim(const GlobalOpts& opts) {
    ExperimentConfig cfg = build_config(opts);
    if (opts.full) cfg.trials = std::max(cfg.trials, 10000);
    std::cerr << "[mfas] fama-sim: trials=" << cfg.trials << " p=" << cfg.p_max
              << " u=" << cfg.u_count << " threads=" << cfg.threads << "\n";
    Timer timer;
    const ResultTable table = run_selection_trials(cfg);
    emit(table, prepare_out(opts) / "fama_sim_trials.csv", timer.seconds());
    return 0;
}

int run_em_sim(const GlobalOpts& opts, bool dump_field, int field_correlation_count) {
    ExperimentConfig cfg = build_config(opts);
    if (opts.full) cfg.em.scenes = std::max(cfg.em.scenes, 500);
    std::cerr << "[mfas] em-sim: scenes=" << cfg.em.scenes
              << " distributions=" << cfg.em.distributions << "\n";
    Timer timer;
    const ResultTable table = run_em_outage(cfg);
    const fs::path dir = prepare_out(opts);
    emit(table, dir / "em_sim_outage.csv", timer.seconds());

    if (field_correlation_count > 0) {
        // correlation of aperture field maps across random activation draws
        RandomStream rng = RandomStream::substream(cfg.seed, domain_tag("em_field_corr"), 0);
        const em::ApertureGrid aperture = detail::experiment_aperture(cfg);
        const auto positions = em::array_positions(
            cfg.grid, em::Vec3(0.0, -cfg.em.tx_distance, cfg.grid.w2 / 2.0));
        std::vector<Eigen::VectorXcd> maps;
        maps.reserve(field_correlation_count);
        const double dx = aperture.d_w / (aperture.nx - 1);
        const double dz = aperture.d_h / (aperture.nz - 1);
        for (int p = 0; p < field_correlation_count; ++p) {
            em::TxScene scene;
            scene.transmitters.resize(1);
            do {
                scene.transmitters[0].clear();
                for (const auto& pos : positions)
                    if (rng.bernoulli(cfg.em.tx_q))
                        scene.transmitters[0].push_back({pos, em::Complex(1.0, 0.0)});
            } while (scene.transmitters[0].empty());
            Eigen::VectorXcd map(aperture.nx * aperture.nz);
            int idx = 0;
            for (int iz = 0; iz < aperture.nz; ++iz)
                for (int ix = 0; ix < aperture.nx; ++ix)
                    map(idx++) = em::total_field(scene, 0,
                                                 em::Vec3(aperture.origin.x() + ix * dx,
                                                          aperture.origin.y(),
                                                          aperture.origin.z() + iz * dz))
                                     .y();
            maps.push_back(std::move(map));
        }
        std::ofstream out(dir / "em_field_correlation.csv");
        em::write_matrix_csv(em::field_correlation(maps), out);
        std::cerr << "[mfas] wrote " << (dir / "em_field_correlation.csv").string() << "\n";
    }

    if (dump_field) {
        RandomStream rng = RandomStream::substream(cfg.seed, domain_tag("em_field_dump"), 0);
        const auto transmitters = detail::draw_em_scene(cfg, rng);
        em::TxScene scene;
        scene.transmitters = {transmitters[0]};
        const em::ApertureGrid aperture = detail::experiment_aperture(cfg);
        std::ofstream out(dir / "em_field_map.csv");
        em::write_field_map_csv(
            [&](double x, double z) {
                return em::total_field(scene, 0, em::Vec3(x, aperture.origin.y(), z));
            },
            aperture, out);
        std::cerr << "[mfas] wrote " << (dir / "em_field_map.csv").string() << "\n";
    }
    return 0;
}

int run_reproduce(const GlobalOpts& opts, const std::string& figure) {
    ExperimentConfig cfg = build_config(opts);
    const fs::path dir = prepare_out(opts);
    Timer timer;
    if (figure == "fig2") {
        if (opts.full) cfg.trials = std::max(cfg.trials, 10000);
        std::cerr << "[mfas] fig2: trials=" << cfg.trials << " threads=" << cfg.threads << "\n";
        emit(run_outage_vs_p(cfg), dir / "fig2_outage_vs_p.csv", timer.seconds());
    } else if (figure == "fig3") {
        if (opts.full) cfg.trials = std::max(cfg.trials, 10000);
        std::cerr << "[mfas] fig3: trials=" << cfg.trials << " p=" << cfg.p_max << "\n";
        emit(run_outage_vs_gamma(cfg), dir / "fig3_outage_vs_gamma.csv", timer.seconds());
    } else if (figure == "fig5" || figure == "fig6") {
        const int draws = opts.full ? 5000000 : 50000;
        std::cerr << "[mfas] " << figure << ": draws=" << draws << "\n";
        const AnalyticalValidation v = run_analytical_validation(cfg, draws);
        if (figure == "fig5")
            emit(v.outage, dir / "fig5_analytic_outage.csv", timer.seconds());
        else
            emit(v.mgain, dir / "fig6_multiplexing_gain.csv", timer.seconds());
    } else if (figure == "fig8") {
        if (opts.full) cfg.em.scenes = std::max(cfg.em.scenes, 500);
        std::cerr << "[mfas] fig8: scenes=" << cfg.em.scenes
                  << " distributions=" << cfg.em.distributions << "\n";
        const EmVsJakesResult r = run_em_vs_jakes(cfg);
        emit(r.table, dir / "fig8_em_vs_jakes.csv", timer.seconds());
        char line[128];
        std::snprintf(line, sizeof line, "max_gap=%.17g\n", r.max_gap);
        std::cout << line;
    } else {
        throw ConfigError("reproduce: unknown figure '" + figure +
                          "' (expected fig2|fig3|fig5|fig6|fig8)");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"meta-fluid antenna multiple access simulation toolkit"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    GlobalOpts opts;
    app.add_option("--config", opts.config_path, "JSON config file");
    app.add_option("--out", opts.out_dir, "output directory (default: out)");
    app.add_option("--set", opts.overrides, "config override key=value (repeatable)");
    auto* seed_opt = app.add_option("--seed", opts.seed, "master random seed");
    app.add_option("--threads", opts.threads, "worker threads");
    app.add_flag("--full", opts.full, "full-scale run sizes");

    std::string grid_arg, aperture_arg, d_arg = "auto", mode_arg = "paper";
    double sigma2 = 1.0, rho = 0.96, energy = 0.95, omega = 1.0;
    int active = 1;
    bool dump_field = false;
    int field_correlation_count = 0;
    std::string figure;

    auto* corr = app.add_subcommand("correlation", "emit the spatial correlation matrix");
    corr->fallthrough();
    corr->add_option("--grid", grid_arg, "element counts <n1>x<n2>");
    corr->add_option("--aperture", aperture_arg, "aperture spans <w1>x<w2> in wavelengths");
    corr->add_option("--sigma2", sigma2, "per-element channel variance");

    auto* block = app.add_subcommand("block-approx", "fit block-correlation models");
    block->fallthrough();
    block->add_option("--grid", grid_arg, "element counts <n1>x<n2>");
    block->add_option("--aperture", aperture_arg, "aperture spans <w1>x<w2> in wavelengths");
    block->add_option("--d", d_arg, "block count or 'auto'");
    block->add_option("--rho", rho, "constant-model correlation coefficient");
    block->add_option("--mode", mode_arg, "variable-model coefficient rule: paper|ls_optimal");
    block->add_option("--energy", energy, "trace share for the automatic block count");

    auto* outage = app.add_subcommand("outage", "closed-form outage tables");
    outage->fallthrough();
    outage->add_option("--omega", omega, "effective channel variance");
    outage->add_option("--active", active, "active element count");

    app.add_subcommand("fama-sim", "random-search selection Monte Carlo")->fallthrough();

    auto* em = app.add_subcommand("em-sim", "dipole-scene S-parameter SIR experiment");
    em->fallthrough();
    em->add_flag("--dump-field", dump_field, "also export one scene's aperture field map");
    em->add_option("--field-correlation", field_correlation_count,
                   "export the field-correlation matrix over N random activations");

    auto* rep = app.add_subcommand("reproduce", "canonical experiment presets");
    rep->fallthrough();
    rep->add_option("figure", figure, "fig2|fig3|fig5|fig6|fig8")->required();

    try {
        app.parse(argc, argv);
        opts.seed_set = seed_opt->count() > 0;
        if (corr->parsed()) return run_correlation(opts, grid_arg, aperture_arg, sigma2);
        if (block->parsed())
            return run_block_approx(opts, grid_arg, aperture_arg, d_arg, rho, mode_arg, energy);
        if (outage->parsed()) return run_outage_tables(opts, omega, active);
        if (app.get_subcommand("fama-sim")->parsed()) return run_fama_sim(opts);
        if (em->parsed()) return run_em_sim(opts, dump_field, field_correlation_count);
        if (rep->parsed()) return run_reproduce(opts, figure);
        std::cerr << app.help();
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // help/version exit clean, parse errors are config errors
    } catch (const ConfigError& e) {
        std::cerr << "[mfas] config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "[mfas] error: " << e.what() << "\n";
        return 2;
    }
}
