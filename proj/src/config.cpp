#include "optexec/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace optexec {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

RunConfig from_ptree(const boost::property_tree::ptree& tree) {
    RunConfig cfg;
    for (const auto& [name, section] : tree) {
        if (section.empty()) throw ConfigError("config key '" + name + "' is outside any section");
        for (const auto& [key, value] : section) cfg.set(name, key, value.data());
    }
    return cfg;
}

double parse_double(const std::string& text, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigError(where + ": '" + text + "' is not a number");
    }
    if (trim(text.substr(used)).size() != 0) throw ConfigError(where + ": '" + text + "' is not a number");
    return v;
}

void require_positive(double v, const std::string& where) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(where + " must be positive");
}

}  // namespace

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

RunConfig RunConfig::from_string(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return from_ptree(tree);
}

void RunConfig::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw ConfigError("override '" + assignment + "' must look like section.key=value");
    }
    set(trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
        trim(assignment.substr(eq + 1)));
}

void RunConfig::set(const std::string& section, const std::string& key, const std::string& value) {
    if (section.empty() || key.empty()) throw ConfigError("empty section or key name");
    sections_[section][key] = trim(value);
}

bool RunConfig::has(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) != 0;
}

bool RunConfig::has_section(const std::string& section) const {
    return sections_.count(section) != 0;
}

const RunConfig::Section& RunConfig::section(const std::string& name) const {
    const auto it = sections_.find(name);
    if (it == sections_.end()) throw ConfigError("missing config section [" + name + "]");
    return it->second;
}

std::string RunConfig::get_string(const std::string& section, const std::string& key) const {
    const auto& s = this->section(section);
    const auto it = s.find(key);
    if (it == s.end()) throw ConfigError("missing key '" + key + "' in [" + section + "]");
    return it->second;
}

std::string RunConfig::get_string(const std::string& section, const std::string& key,
                                  const std::string& fallback) const {
    return has(section, key) ? get_string(section, key) : fallback;
}

double RunConfig::get_double(const std::string& section, const std::string& key) const {
    return parse_double(get_string(section, key), section + "." + key);
}

double RunConfig::get_double(const std::string& section, const std::string& key,
                             double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

long long RunConfig::get_int(const std::string& section, const std::string& key,
                             long long fallback) const {
    if (!has(section, key)) return fallback;
    const auto text = get_string(section, key);
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        throw ConfigError(section + "." + key + ": '" + text + "' is not an integer");
    }
    if (used != text.size()) throw ConfigError(section + "." + key + ": '" + text + "' is not an integer");
    return v;
}

bool RunConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    auto text = get_string(section, key);
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError(section + "." + key + ": '" + text + "' is not a boolean");
}

ImpactModel RunConfig::impact() const {
    return ImpactModel::from_config(section("impact"));
}

MarketParams RunConfig::market() const {
    section("market");
    const bool has_mu = has("market", "mu");
    const bool has_tilde = has("market", "mu_tilde");
    const double sigma = get_double("market", "sigma", 0.0);
    if (has_mu) {
        if (!has("market", "sigma") && !has_tilde) {
            throw ConfigError("[market] needs sigma together with mu");
        }
        const auto m = MarketParams::from_mu_sigma(get_double("market", "mu"), sigma);
        if (has_tilde) {
            const double given = get_double("market", "mu_tilde");
            if (std::abs(given - m.mu_tilde()) > 1e-12) {
                throw ConfigError("[market] mu_tilde disagrees with -mu - sigma^2/2");
            }
        }
        return m;
    }
    if (!has_tilde) throw ConfigError("[market] needs either mu and sigma or mu_tilde");
    return MarketParams::from_mu_tilde(get_double("market", "mu_tilde"), sigma);
}

ProblemSpec RunConfig::problem() const {
    ProblemSpec p;
    p.c0 = get_double("problem", "c0", 0.0);
    p.x0 = get_double("problem", "x0");
    p.s0 = get_double("problem", "s0");
    p.horizon = get_double("problem", "T");
    if (!(p.x0 >= 0.0)) throw ConfigError("problem.x0 must be non-negative");
    if (!(p.s0 >= 0.0)) throw ConfigError("problem.s0 must be non-negative");
    require_positive(p.horizon, "problem.T");
    return p;
}

SolverSpec RunConfig::solver() const {
    SolverSpec s;
    auto& o = s.options;
    const auto nt = get_int("solver", "nt", static_cast<long long>(o.nt));
    const auto nx = get_int("solver", "nx", static_cast<long long>(o.nx));
    if (nt < 2 || nx < 2) throw ConfigError("solver grid sizes must be >= 2");
    o.nt = static_cast<std::size_t>(nt);
    o.nx = static_cast<std::size_t>(nx);
    o.y_max = get_double("solver", "y_max", 0.0);
    if (o.y_max < 0.0) throw ConfigError("solver.y_max must be non-negative (0 selects the default)");
    o.max_doublings = static_cast<int>(get_int("solver", "max_doublings", o.max_doublings));
    if (o.max_doublings < 0) throw ConfigError("solver.max_doublings must be non-negative");
    o.saturation_tol = get_double("solver", "saturation_tol", o.saturation_tol);
    require_positive(o.saturation_tol, "solver.saturation_tol");
    o.w_eps = get_double("solver", "w_eps", o.w_eps);
    require_positive(o.w_eps, "solver.w_eps");
    o.fallback_points = static_cast<int>(get_int("solver", "fallback_points", o.fallback_points));
    if (o.fallback_points < 2) throw ConfigError("solver.fallback_points must be >= 2");
    o.growth_limit = get_double("solver", "growth_limit", o.growth_limit);
    require_positive(o.growth_limit, "solver.growth_limit");
    // Negative selects a tenth of the horizon.
    o.residual_t_min = get_double("solver", "residual_t_min", -1.0);
    s.x_max = get_double("solver", "x_max", 0.0);
    if (s.x_max < 0.0) throw ConfigError("solver.x_max must be non-negative (0 selects 2 x0)");
    s.refinement = get_bool("solver", "refinement", true);
    return s;
}

SimSpec RunConfig::sim() const {
    SimSpec s;
    const auto paths = get_int("sim", "n_paths", static_cast<long long>(s.n_paths));
    const auto steps = get_int("sim", "n_steps", static_cast<long long>(s.n_steps));
    if (paths < 1 || steps < 1) throw ConfigError("sim.n_paths and sim.n_steps must be >= 1");
    s.n_paths = static_cast<std::size_t>(paths);
    s.n_steps = static_cast<std::size_t>(steps);
    const auto seed = get_int("sim", "seed", 1);
    if (seed < 0) throw ConfigError("sim.seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
    s.y_min = get_double("sim", "y_min", s.y_min);
    const auto keep = get_int("sim", "keep_paths", 0);
    if (keep < 0) throw ConfigError("sim.keep_paths must be non-negative");
    s.keep_paths = static_cast<std::size_t>(keep);
    s.strategy = get_string("sim", "strategy", s.strategy);
    return s;
}

unsigned RunConfig::threads() const {
    const auto t = get_int("run", "threads", 1);
    if (t < 1) throw ConfigError("run.threads must be >= 1");
    return static_cast<unsigned>(t);
}

std::filesystem::path RunConfig::output_dir() const {
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
    return get_string("output", "dir", "optexec_out");
}

std::string RunConfig::to_ini() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& [name, section] : sections_) {
        if (!first) out << '\n';
        first = false;
        out << '[' << name << "]\n";
        for (const auto& [key, value] : section) out << key << " = " << value << '\n';
    }
    return out.str();
}

}  // namespace optexec
