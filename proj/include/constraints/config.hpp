// Run configuration: a flat key/value file with [sections], plus the
// little trigonometric literal language used to describe seed fields:
//
//   tau = const 1 + cos 0.15 1 0 0
//
// term := const <c> | cos <amp> <k1> ... <kn> | sin <amp> <k1> ... <kn>
// where the k's are integer frequencies per axis; terms are summed.

#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "constraints/errors.hpp"
#include "constraints/fields.hpp"

namespace constraints {

struct RunConfig {
    int n = 3;
    int m = 16;
    std::string mode = "fixed-point";
    std::string out_dir = "out";
    bool verbose = false;

    // seed description
    std::string preset;                   // constant | parity-smooth | cmc (optional)
    std::optional<std::string> tau_expr;
    std::optional<std::string> eta_expr;
    std::optional<std::string> sigma_parallel;  // "s0" magnitude for the parallel TT tensor
    std::map<std::string, std::string> sigma_components;  // literals for make-tt / raw tensors
    std::optional<std::string> sigma_file;
    std::optional<std::string> phi_file;  // for mode = check
    std::optional<std::string> w_file;
    std::optional<double> sigma_scale;   // rescale sigma to this L2 norm
    bool parity = false;
    double p = 3.5;
    double t = 2.0;

    // solver knobs
    double tol = 1e-11;
    double fixpoint_tol = 1e-11;
    double continuation_tol = 1e-10;
    double lambda_max = 0.1;
    std::vector<double> lambda_checkpoints;
    int probe_count = 64;
    int sobolev_trials = 256;
    double check_tol = 1e-8;
    double q0 = -1.0;  // bootstrap start (default N/2+1)
    int i_max = 24;

    // raw key/value echo for the report
    std::map<std::string, std::string> raw;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

inline int parse_int(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    if (d != std::floor(d)) throw ConfigError("config: expected integer for " + key);
    return static_cast<int>(d);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: expected boolean for " + key + ": '" + v + "'");
}

}  // namespace detail

// Evaluate a trigonometric literal on the grid.
inline ScalarField parse_field_literal(const Grid& g, const std::string& expr) {
    ScalarField out(g);
    std::stringstream terms(expr);
    std::string term;
    bool any = false;
    while (std::getline(terms, term, '+')) {
        term = detail::trim(term);
        if (term.empty()) continue;
        any = true;
        std::stringstream ss(term);
        std::string kind;
        ss >> kind;
        if (kind == "const") {
            double c;
            if (!(ss >> c)) throw ConfigError("field literal: const needs a value: " + term);
            out += c;
        } else if (kind == "cos" || kind == "sin") {
            double amp;
            if (!(ss >> amp)) throw ConfigError("field literal: missing amplitude: " + term);
            std::vector<double> k(g.dim, 0.0);
            for (int a = 0; a < g.dim; ++a)
                if (!(ss >> k[a]))
                    throw ConfigError("field literal: needs " + std::to_string(g.dim) +
                                      " frequencies: " + term);
            const bool is_cos = (kind == "cos");
            out += sample(g, [&k, amp, is_cos, &g](const std::vector<double>& x) {
                double phase = 0.0;
                for (int a = 0; a < g.dim; ++a) phase += k[a] * x[a];
                phase *= 2.0 * M_PI;
                return amp * (is_cos ? std::cos(phase) : std::sin(phase));
            });
        } else {
            throw ConfigError("field literal: unknown term '" + kind + "'");
        }
    }
    if (!any) throw ConfigError("field literal: empty expression");
    return out;
}

inline RunConfig parse_config_text(std::istream& in, const std::string& origin) {
    RunConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (!section.empty()) key = section + "." + key;
        cfg.raw[key] = value;

        if (key == "run.n" || key == "n") cfg.n = detail::parse_int(key, value);
        else if (key == "run.m" || key == "m") cfg.m = detail::parse_int(key, value);
        else if (key == "run.mode" || key == "mode") cfg.mode = value;
        else if (key == "run.out" || key == "out") cfg.out_dir = value;
        else if (key == "run.verbose") cfg.verbose = detail::parse_bool(key, value);
        else if (key == "seed.preset") cfg.preset = value;
        else if (key == "seed.tau") cfg.tau_expr = value;
        else if (key == "seed.eta") cfg.eta_expr = value;
        else if (key == "seed.sigma_parallel") cfg.sigma_parallel = value;
        else if (key.rfind("seed.sigma_", 0) == 0 && key.size() == 13)
            cfg.sigma_components[key.substr(5)] = value;  // sigma_00 ... sigma_22
        else if (key == "seed.u") { /* kept in raw; used by the vector driver */ }
        else if (key == "seed.sigma_file") cfg.sigma_file = value;
        else if (key == "seed.phi_file") cfg.phi_file = value;
        else if (key == "seed.w_file") cfg.w_file = value;
        else if (key == "seed.sigma_scale") cfg.sigma_scale = detail::parse_double(key, value);
        else if (key == "seed.parity") cfg.parity = detail::parse_bool(key, value);
        else if (key == "seed.p") cfg.p = detail::parse_double(key, value);
        else if (key == "seed.t") cfg.t = detail::parse_double(key, value);
        else if (key == "solve.tol") cfg.tol = detail::parse_double(key, value);
        else if (key == "solve.fixpoint_tol") cfg.fixpoint_tol = detail::parse_double(key, value);
        else if (key == "solve.continuation_tol")
            cfg.continuation_tol = detail::parse_double(key, value);
        else if (key == "solve.lambda_max") cfg.lambda_max = detail::parse_double(key, value);
        else if (key == "solve.lambda_checkpoints") {
            std::stringstream ss(value);
            double v;
            while (ss >> v) cfg.lambda_checkpoints.push_back(v);
        } else if (key == "solve.probe_count") cfg.probe_count = detail::parse_int(key, value);
        else if (key == "solve.sobolev_trials")
            cfg.sobolev_trials = detail::parse_int(key, value);
        else if (key == "solve.check_tol") cfg.check_tol = detail::parse_double(key, value);
        else if (key == "solve.q0") cfg.q0 = detail::parse_double(key, value);
        else if (key == "solve.i_max") cfg.i_max = detail::parse_int(key, value);
        else throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key " + key);
    }
    return cfg;
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config_text(in, path);
}

inline void validate_config(const RunConfig& cfg) {
    static const std::vector<std::string> modes = {
        "fixed-point", "continuation", "lichnerowicz", "vector",
        "make-tt",     "check",        "stability",    "bootstrap"};
    if (std::find(modes.begin(), modes.end(), cfg.mode) == modes.end())
        throw ConfigError("unknown mode: " + cfg.mode);
    if (cfg.n < 3) throw ConfigError("config: n must be >= 3");
    if (cfg.m < 4 || cfg.m % 2 != 0) throw ConfigError("config: m must be even and >= 4");
    if (cfg.p <= cfg.n) throw ConfigError("config: requires p > n");
    if (cfg.t <= 1.0) throw ConfigError("config: requires t > 1");
    if (cfg.tol <= 0 || cfg.fixpoint_tol <= 0) throw ConfigError("config: tolerances must be > 0");
}

}  // namespace constraints
