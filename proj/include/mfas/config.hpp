#pragma once

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfas/block_model.hpp"
#include "mfas/geometry.hpp"

namespace mfas {

// Raised for malformed configuration: unknown keys, bad types, out-of-range
// values. Maps to exit code 1 at the CLI boundary.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Dipole-scene parameters for the EM experiments. Lengths in wavelengths.
struct EmConfig {
    int scenes = 100;          // independent fading-generator scenes
    int distributions = 300;   // receive activation patterns per scene
    // Standoff in the radiating near field: the element-scale field
    // decorrelation that makes receive-side selection effective only exists
    // for separations comparable to the aperture itself.
    double tx_distance = 2.0;  // transmitter plane standoff from the aperture
    double tx_spacing = 0.0;   // lateral x offset between adjacent transmitters
    double tx_q = 0.5;         // transmit-side dipole activation probability
    int nx = 128;              // quadrature samples along the aperture width
    int nz = 64;               // quadrature samples along the aperture height
    double z10 = 377.0;        // TE10 modal impedance (ohms)
};

struct BlockConfig {
    int d_count = 0;          // 0 = automatic (trace-energy rule)
    double energy = 0.95;     // trace share captured by the dominant group
    double rho = 0.96;        // constant-model correlation coefficient
    RhoMode mode = RhoMode::paper;
};

// One configuration drives every experiment; each runner reads the fields it
// needs. dB-valued keys carry a _db suffix and are converted once at this
// boundary's consumers.
struct ExperimentConfig {
    GridSpec grid{15, 8, 7.0, 4.0};
    double sigma2 = 1.0;
    std::vector<int> u_list{2, 4, 6, 8};
    int u_count = 3;
    std::vector<int> p_list{1, 10, 100, 1000, 3000};
    int p_max = 3000;
    std::vector<double> gamma_db_list;  // defaulted below
    double gamma_th_db = 7.0;
    int trials = 2000;
    std::uint64_t seed = 42;
    double q = 0.5;
    std::string model = "jakes";
    std::vector<std::string> baselines{"multi_activation", "slow_fama", "mrc"};
    double noise_to_signal = 0.0;
    bool shared_correlation = true;
    int threads = 1;
    BlockConfig block;
    EmConfig em;

    ExperimentConfig() {
        for (int db = -10; db <= 20; ++db) gamma_db_list.push_back(db);
    }

    void validate() const {
        grid.validate();
        if (sigma2 <= 0.0) throw ConfigError("config: sigma2 must be positive");
        if (trials < 1) throw ConfigError("config: trials must be >= 1");
        if (p_max < 1) throw ConfigError("config: p_max must be >= 1");
        if (gamma_db_list.empty()) throw ConfigError("config: gamma_db_list must be nonempty");
        if (u_count < 1) throw ConfigError("config: u_count must be >= 1");
        if (!(q > 0.0 && q < 1.0)) throw ConfigError("config: q must lie in (0,1)");
        if (noise_to_signal < 0.0) throw ConfigError("config: noise_to_signal must be >= 0");
        if (threads < 1) throw ConfigError("config: threads must be >= 1");
        if (model != "jakes" && model != "em" && model != "analytic")
            throw ConfigError("config: model must be jakes, em or analytic");
        for (const auto& b : baselines)
            if (b != "multi_activation" && b != "slow_fama" && b != "mrc")
                throw ConfigError("config: unknown baseline '" + b + "'");
        if (em.scenes < 1 || em.distributions < 1)
            throw ConfigError("config: em.scenes and em.distributions must be >= 1");
        if (em.tx_distance <= 0.0) throw ConfigError("config: em.tx_distance must be positive");
        if (!(em.tx_q > 0.0 && em.tx_q < 1.0)) throw ConfigError("config: em.tx_q must lie in (0,1)");
        if (block.d_count < 0) throw ConfigError("config: block.d_count must be >= 0");
        if (block.rho < 0.0 || block.rho > 1.0)
            throw ConfigError("config: block.rho must lie in [0,1]");
        if (!(block.energy > 0.0 && block.energy <= 1.0))
            throw ConfigError("config: block.energy must lie in (0,1]");
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                                const std::string& prefix) {
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw ConfigError("config: unknown key '" + prefix + key + "'");
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config: bad value for key '") + key + "'");
    }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: document root must be an object");
    detail::reject_unknown_keys(
        j,
        {"grid", "sigma2", "u_list", "u_count", "p_list", "p_max", "gamma_db_list",
         "gamma_th_db", "trials", "seed", "q", "model", "baselines", "noise_to_signal",
         "shared_correlation", "threads", "block", "em"},
        "");

    ExperimentConfig cfg;
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        detail::reject_unknown_keys(g, {"n1", "n2", "w1", "w2"}, "grid.");
        detail::read_if(g, "n1", cfg.grid.n1);
        detail::read_if(g, "n2", cfg.grid.n2);
        detail::read_if(g, "w1", cfg.grid.w1);
        detail::read_if(g, "w2", cfg.grid.w2);
    }
    detail::read_if(j, "sigma2", cfg.sigma2);
    detail::read_if(j, "u_list", cfg.u_list);
    detail::read_if(j, "u_count", cfg.u_count);
    detail::read_if(j, "p_list", cfg.p_list);
    detail::read_if(j, "p_max", cfg.p_max);
    detail::read_if(j, "gamma_db_list", cfg.gamma_db_list);
    detail::read_if(j, "gamma_th_db", cfg.gamma_th_db);
    detail::read_if(j, "trials", cfg.trials);
    detail::read_if(j, "seed", cfg.seed);
    detail::read_if(j, "q", cfg.q);
    detail::read_if(j, "model", cfg.model);
    detail::read_if(j, "baselines", cfg.baselines);
    detail::read_if(j, "noise_to_signal", cfg.noise_to_signal);
    detail::read_if(j, "shared_correlation", cfg.shared_correlation);
    detail::read_if(j, "threads", cfg.threads);
    if (j.contains("block")) {
        const auto& b = j.at("block");
        detail::reject_unknown_keys(b, {"d_count", "energy", "rho", "mode"}, "block.");
        detail::read_if(b, "d_count", cfg.block.d_count);
        detail::read_if(b, "energy", cfg.block.energy);
        detail::read_if(b, "rho", cfg.block.rho);
        if (b.contains("mode")) {
            const std::string mode = b.at("mode").get<std::string>();
            if (mode == "paper")
                cfg.block.mode = RhoMode::paper;
            else if (mode == "ls_optimal")
                cfg.block.mode = RhoMode::ls_optimal;
            else
                throw ConfigError("config: block.mode must be 'paper' or 'ls_optimal'");
        }
    }
    if (j.contains("em")) {
        const auto& e = j.at("em");
        detail::reject_unknown_keys(
            e, {"scenes", "distributions", "tx_distance", "tx_spacing", "tx_q", "nx", "nz", "z10"},
            "em.");
        detail::read_if(e, "scenes", cfg.em.scenes);
        detail::read_if(e, "distributions", cfg.em.distributions);
        detail::read_if(e, "tx_distance", cfg.em.tx_distance);
        detail::read_if(e, "tx_spacing", cfg.em.tx_spacing);
        detail::read_if(e, "tx_q", cfg.em.tx_q);
        detail::read_if(e, "nx", cfg.em.nx);
        detail::read_if(e, "nz", cfg.em.nz);
        detail::read_if(e, "z10", cfg.em.z10);
    }
    cfg.validate();
    return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["grid"] = {{"n1", cfg.grid.n1}, {"n2", cfg.grid.n2}, {"w1", cfg.grid.w1}, {"w2", cfg.grid.w2}};
    j["sigma2"] = cfg.sigma2;
    j["u_list"] = cfg.u_list;
    j["u_count"] = cfg.u_count;
    j["p_list"] = cfg.p_list;
    j["p_max"] = cfg.p_max;
    j["gamma_db_list"] = cfg.gamma_db_list;
    j["gamma_th_db"] = cfg.gamma_th_db;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["q"] = cfg.q;
    j["model"] = cfg.model;
    j["baselines"] = cfg.baselines;
    j["noise_to_signal"] = cfg.noise_to_signal;
    j["shared_correlation"] = cfg.shared_correlation;
    // threads is an execution detail, not part of the experiment identity:
    // results are invariant to it, so it stays out of the echo.
    j["block"] = {{"d_count", cfg.block.d_count},
                  {"energy", cfg.block.energy},
                  {"rho", cfg.block.rho},
                  {"mode", cfg.block.mode == RhoMode::paper ? "paper" : "ls_optimal"}};
    j["em"] = {{"scenes", cfg.em.scenes},
               {"distributions", cfg.em.distributions},
               {"tx_distance", cfg.em.tx_distance},
               {"tx_spacing", cfg.em.tx_spacing},
               {"tx_q", cfg.em.tx_q},
               {"nx", cfg.em.nx},
               {"nz", cfg.em.nz},
               {"z10", cfg.em.z10}};
    return j;
}

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: invalid JSON in '" + path + "': " + e.what());
    }
    return j;
}

// key=value overrides with dotted paths ("trials=5000", "em.scenes=10").
// Values parse as JSON literals where possible, otherwise as strings.
// Unknown keys are rejected by the subsequent parse.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("config: override must look like key=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        value = raw;  // plain string
    }
    nlohmann::json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string part = path.substr(start, dot - start);
        if (part.empty())
            throw ConfigError("config: empty key segment in '" + assignment + "'");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            break;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

}  // namespace mfas
