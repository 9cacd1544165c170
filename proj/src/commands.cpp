#include "optexec/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>

#include "optexec/closed_form.hpp"
#include "optexec/execution_sim.hpp"
#include "optexec/hamiltonian.hpp"
#include "optexec/hjb_solver.hpp"

namespace optexec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

json stats_json(const TerminalStats& s) {
    json q = json::object();
    for (std::size_t k = 0; k < s.quantile_levels.size() && k < s.quantiles.size(); ++k) {
        std::ostringstream key;
        key << 'q' << std::setw(2) << std::setfill('0')
            << static_cast<int>(std::lround(100 * s.quantile_levels[k]));
        q[key.str()] = s.quantiles[k];
    }
    return {{"mean", s.mean}, {"variance", s.variance}, {"quantiles", q}};
}

CsvTable schedule_table(const Schedule& schedule, int samples) {
    CsvTable t{"schedule", {"t", "rate"}, {}};
    const double T = schedule.horizon();
    for (int k = 0; k < samples; ++k) {
        const double time = T * k / std::max(1, samples - 1);
        t.rows.push_back({time, schedule.rate(time)});
    }
    return t;
}

int schedule_samples(const RunConfig& cfg) {
    const auto n = cfg.get_int("output", "schedule_samples", 101);
    if (n < 2) throw ConfigError("output.schedule_samples must be >= 2");
    return static_cast<int>(n);
}

double solver_x_max(const SolverSpec& spec, const ProblemSpec& p) {
    const double x_max = spec.x_max > 0.0 ? spec.x_max : 2.0 * p.x0;
    if (!(x_max > 0.0)) throw ConfigError("solver.x_max must be positive (x0 is zero)");
    if (p.x0 > x_max) throw ConfigError("problem.x0 exceeds solver.x_max");
    return x_max;
}

// Builds the strategies named in the config. Vocabulary:
//   zero | twap | twap:k (k nu_h) | threshold (rate x0_bar) |
//   constant:r | mixed_power | hjb
class StrategyFactory {
public:
    explicit StrategyFactory(const RunConfig& cfg)
        : cfg_(cfg), model_(cfg.impact()), market_(cfg.market()), problem_(cfg.problem()) {}

    Strategy build(const std::string& spec) {
        const auto colon = spec.find(':');
        const std::string kind = spec.substr(0, colon);
        const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
        const double T = problem_.horizon;
        const double x0 = problem_.x0;
        const auto sell_at = [&](double rate) {
            if (!(rate > 0.0)) throw ConfigError("strategy '" + spec + "' has a non-positive rate");
            return Strategy::deterministic(Schedule::constant_until(rate, x0 / rate, T));
        };
        if (kind == "zero") return Strategy::deterministic(Schedule::zero(T));
        if (kind == "twap") {
            const double k = arg.empty() ? 1.0 : std::stod(arg);
            return sell_at(k * nu_h(model_, market_.mu_tilde()));
        }
        if (kind == "threshold") return sell_at(model_.threshold());
        if (kind == "constant") {
            if (arg.empty()) throw ConfigError("strategy 'constant' needs a rate, e.g. constant:0.5");
            return sell_at(std::stod(arg));
        }
        if (kind == "mixed_power") {
            const auto sol = mixed_power_solution(problem_.c0, x0, problem_.s0, model_,
                                                  market_.mu_tilde(), T);
            if (!sol.schedule) {
                throw HypothesisViolation(
                    "no closed-form mixed-power schedule for this inventory",
                    "x0 lies between x*2 and x*1; use the 'hjb' strategy");
            }
            return Strategy::deterministic(*sol.schedule);
        }
        if (kind == "hjb") return Strategy::feedback(surface());
        throw ConfigError("unknown strategy '" + spec + "'");
    }

    std::shared_ptr<const ValueSurface> surface() {
        if (!surface_) {
            const auto spec = cfg_.solver();
            surface_ = std::make_shared<ValueSurface>(solve_reduced_hjb(
                model_, market_.mu_tilde(), problem_.horizon, solver_x_max(spec, problem_),
                spec.options));
        }
        return surface_;
    }

    const ImpactModel& model() const { return model_; }
    const MarketParams& market() const { return market_; }
    const ProblemSpec& problem() const { return problem_; }

private:
    const RunConfig& cfg_;
    ImpactModel model_;
    MarketParams market_;
    ProblemSpec problem_;
    std::shared_ptr<const ValueSurface> surface_;
};

SimConfig sim_config(const RunConfig& cfg, const ProblemSpec& p) {
    const auto s = cfg.sim();
    SimConfig out;
    out.c0 = p.c0;
    out.x0 = p.x0;
    out.s0 = p.s0;
    out.horizon = p.horizon;
    out.n_paths = s.n_paths;
    out.n_steps = s.n_steps;
    out.seed = s.seed;
    out.y_min = s.y_min;
    out.keep_paths = s.keep_paths;
    out.threads = cfg.threads();
    return out;
}

// --- subcommands -------------------------------------------------------------

CommandOutput cmd_twap(const RunConfig& cfg) {
    const auto m = cfg.impact();
    const auto market = cfg.market();
    const auto p = cfg.problem();
    const auto sol = twap_solution(p.c0, p.x0, p.s0, m, market.mu_tilde(), p.horizon);
    CommandOutput out;
    out.summary = {{"value", sol.value},
                   {"nu_h", sol.nu},
                   {"h_nu_h", sol.marginal},
                   {"stop_time", p.x0 / sol.nu},
                   {"mu_tilde", market.mu_tilde()}};
    out.tables.push_back(schedule_table(sol.schedule, schedule_samples(cfg)));
    return out;
}

CommandOutput cmd_mixed_power(const RunConfig& cfg) {
    const auto m = cfg.impact();
    const auto market = cfg.market();
    const auto p = cfg.problem();
    const auto sol = mixed_power_solution(p.c0, p.x0, p.s0, m, market.mu_tilde(), p.horizon);
    CommandOutput out;
    out.summary = {{"regime", std::string(to_string(sol.regime))},
                   {"value", sol.value ? json(*sol.value) : json(nullptr)},
                   {"x_star_1", sol.x_star_1},
                   {"x_star_2", sol.x_star_2},
                   {"delta", sol.delta},
                   {"nu", sol.nu}};
    if (sol.schedule) {
        out.tables.push_back(schedule_table(*sol.schedule, schedule_samples(cfg)));
    } else {
        out.summary["hint"] = "no closed form between x*2 and x*1; run solve-hjb";
    }
    return out;
}

CommandOutput cmd_levy_nu(const RunConfig& cfg) {
    const auto m = cfg.impact();
    const auto* lp = std::get_if<LevyEffectiveParams>(&m.params());
    if (lp == nullptr) throw ConfigError("levy-nu needs [impact] family = levy_effective");
    const double mu_tilde = cfg.market().mu_tilde();
    const double nu = levy_nu_hat(lp->gamma, lp->alpha0, lp->alpha1, lp->beta1, mu_tilde);
    const double eq = levy_speed_equation(lp->gamma, lp->alpha0, lp->alpha1, lp->beta1, nu);
    CommandOutput out;
    out.summary = {{"nu_hat", nu},
                   {"equation_residual", eq - mu_tilde},
                   {"big_g_residual", m.big_g(nu) - mu_tilde},
                   {"h_nu_hat", m.h(nu)},
                   {"mu_tilde", mu_tilde}};
    return out;
}

CommandOutput cmd_extreme_compare(const RunConfig& cfg) {
    const auto m = cfg.impact();
    const auto market = cfg.market();
    const auto p = cfg.problem();
    const auto cmp = extreme_comparison(m, p.x0, p.s0, market.mu_tilde(), p.horizon);
    CommandOutput out;
    out.summary = {{"c_hat", cmp.c_hat},
                   {"c_tilde", cmp.c_tilde},
                   {"difference", cmp.c_hat - cmp.c_tilde},
                   {"nu_h", cmp.nu},
                   {"h_nu_h", cmp.marginal},
                   {"mu_tilde_over_x0_bar", market.mu_tilde() / m.threshold()}};
    return out;
}

CommandOutput cmd_solve_hjb(const RunConfig& cfg) {
    const auto m = cfg.impact();
    const double mu_tilde = cfg.market().mu_tilde();
    const auto p = cfg.problem();
    const auto spec = cfg.solver();
    const double x_max = solver_x_max(spec, p);
    const auto surface = solve_reduced_hjb(m, mu_tilde, p.horizon, x_max, spec.options);
    const double w = surface.interpolate(p.horizon, p.x0);

    auto residual_opts = spec.options;
    if (residual_opts.residual_t_min < 0.0) residual_opts.residual_t_min = 0.1 * p.horizon;
    auto all_rows = spec.options;
    all_rows.residual_t_min = 0.0;

    CommandOutput out;
    double max_speed = 0.0;
    std::size_t selling = 0;
    for (double y : surface.policy_values()) {
        max_speed = std::max(max_speed, y);
        if (y > 0.0) ++selling;
    }
    out.summary = {
        {"W_T_x0", w},
        {"value", full_value_from_reduced(p.c0, p.s0, surface, p.horizon, p.x0)},
        {"residual", hjb_residual(surface, m, mu_tilde, residual_opts)},
        {"residual_t_min", residual_opts.residual_t_min},
        {"residual_all_rows", hjb_residual(surface, m, mu_tilde, all_rows)},
        {"grid", {{"nt", surface.nt()}, {"nx", surface.nx()}, {"x_max", x_max}}},
        {"y_max", surface.y_max},
        {"y_max_doublings", surface.y_max_doublings},
        {"substeps", surface.substeps},
        {"policy",
         {{"max_speed", max_speed},
          {"selling_fraction",
           static_cast<double>(selling) / static_cast<double>(surface.policy_values().size())},
          {"saturation_fraction", surface.saturation_fraction}}}};
    if (spec.refinement) {
        const auto coarse = solve_reduced_hjb(m, mu_tilde, p.horizon, x_max,
                                              std::max<std::size_t>(2, surface.nt() / 2),
                                              std::max<std::size_t>(2, surface.nx() / 2),
                                              surface.y_max);
        out.summary["refinement_estimate"] = std::abs(w - coarse.interpolate(p.horizon, p.x0));
    }
    if (!m.violates_a4() && mu_tilde > 0.0 && p.x0 > 0.0) {
        const double nu = nu_h(m, mu_tilde);
        if (p.x0 <= nu * p.horizon) {
            out.summary["twap_reference"] = twap_value(p.c0, p.x0, p.s0, m.h(nu));
        }
    }

    CsvTable table{"surface", {"t", "x", "W", "y_star"}, {}};
    for (std::size_t n = 0; n <= surface.nt(); ++n) {
        for (std::size_t i = 0; i <= surface.nx(); ++i) {
            table.rows.push_back({surface.t_at(n), surface.x_at(i), surface.w(n, i),
                                  surface.policy(n, i)});
        }
    }
    out.tables.push_back(std::move(table));
    return out;
}

CommandOutput cmd_simulate(const RunConfig& cfg) {
    StrategyFactory factory(cfg);
    const auto spec = cfg.sim();
    const auto strategy = factory.build(spec.strategy);
    const auto sc = sim_config(cfg, factory.problem());
    const auto coeffs = CoefficientSet::black_scholes(factory.market().mu(), factory.market().sigma());
    const auto r = simulate(strategy, coeffs, factory.model(), sc);
    CommandOutput out;
    out.summary = {{"strategy", spec.strategy},
                   {"mean", r.mean_utility},
                   {"se", r.std_error},
                   {"n_paths", r.n_paths},
                   {"n_steps", sc.n_steps},
                   {"absorption_count", r.absorption_count},
                   {"C_T", stats_json(r.c_stats)},
                   {"X_T", stats_json(r.x_stats)},
                   {"S_T", stats_json(r.s_stats)}};
    if (!r.paths.empty()) {
        CsvTable paths{"paths", {"path", "C_T", "X_T", "S_T", "utility", "absorbed"}, {}};
        for (const auto& rec : r.paths) {
            paths.rows.push_back({static_cast<double>(rec.index), rec.c, rec.x, rec.s, rec.utility,
                                  rec.absorbed ? 1.0 : 0.0});
        }
        out.tables.push_back(std::move(paths));
    }
    return out;
}

CommandOutput cmd_compare(const RunConfig& cfg) {
    StrategyFactory factory(cfg);
    const auto names = split_list(cfg.get_string("compare", "strategies", "twap,twap:2"));
    if (names.size() < 2) throw ConfigError("compare.strategies needs at least two entries");
    std::vector<NamedStrategy> strategies;
    for (const auto& n : names) strategies.push_back({n, factory.build(n)});
    const auto sc = sim_config(cfg, factory.problem());
    const auto coeffs = CoefficientSet::black_scholes(factory.market().mu(), factory.market().sigma());
    const auto table = compare_strategies(strategies, coeffs, factory.model(), sc);

    CommandOutput out;
    json rows = json::array();
    CsvTable means{"strategies", {"index", "mean", "se"}, {}};
    for (std::size_t i = 0; i < table.strategies.size(); ++i) {
        const auto& s = table.strategies[i];
        rows.push_back({{"name", s.name}, {"mean", s.mean}, {"se", s.std_error}});
        means.rows.push_back({static_cast<double>(i), s.mean, s.std_error});
    }
    json diffs = json::array();
    CsvTable dtable{"differences", {"first", "second", "mean", "se"}, {}};
    for (const auto& d : table.differences) {
        diffs.push_back({{"first", table.strategies[d.first].name},
                         {"second", table.strategies[d.second].name},
                         {"mean", d.mean},
                         {"se", d.std_error}});
        dtable.rows.push_back({static_cast<double>(d.first), static_cast<double>(d.second), d.mean,
                               d.std_error});
    }
    json ranking = json::array();
    for (auto i : table.ranking) ranking.push_back(table.strategies[i].name);
    out.summary = {{"strategies", rows},
                   {"differences", diffs},
                   {"ranking", ranking},
                   {"n_paths", sc.n_paths},
                   {"n_steps", sc.n_steps}};
    out.tables.push_back(std::move(means));
    out.tables.push_back(std::move(dtable));
    return out;
}

CommandOutput cmd_hamiltonian_check(const RunConfig& cfg) {
    const auto m = cfg.impact();
    const auto samples = cfg.get_int("hamiltonian", "samples", 1000);
    const auto seed = cfg.get_int("hamiltonian", "seed", 11);
    const double y_max = cfg.get_double("hamiltonian", "y_max", 10.0);
    const auto grid = cfg.get_int("hamiltonian", "grid", 10000);
    if (samples < 1 || grid < 2 || !(y_max > 0.0)) {
        throw ConfigError("[hamiltonian] needs samples >= 1, grid >= 2 and y_max > 0");
    }
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::uniform_real_distribution<double> us(0.1, 10.0), uc(-1.0, 5.0), ux(-2.0, 2.0),
        ups(0.01, 3.0);
    CsvTable table{"hamiltonian", {"s", "p_c", "p_x", "p_s", "H_closed", "H_brute", "Xi"}, {}};
    double worst = 0.0;
    bool xi_ok = true;
    for (long long k = 0; k < samples; ++k) {
        const double s = us(rng);
        const Gradient p{uc(rng), ux(rng), ups(rng)};
        const double hc = hamiltonian_closed(s, p, m);
        const auto hb = hamiltonian_brute(s, p, m, y_max, static_cast<int>(grid));
        const double x = xi(s, p, m);
        if (!(x == 0.0 || x > m.threshold())) xi_ok = false;
        worst = std::max(worst, std::abs(hc - hb.value) / (1.0 + std::abs(hc)));
        table.rows.push_back({s, p.p_c, p.p_x, p.p_s, hc, hb.value, x});
    }
    CommandOutput out;
    out.summary = {{"samples", samples},
                   {"max_scaled_error", worst},
                   {"pass", worst <= 1e-6 && xi_ok},
                   {"xi_range_ok", xi_ok}};
    out.tables.push_back(std::move(table));
    return out;
}

CommandOutput cmd_impact_plot(const RunConfig& cfg) {
    const auto m = cfg.impact();
    const double x_max = cfg.get_double("plot", "x_max", 3.0 * std::max(1.0, m.threshold()));
    const auto points = cfg.get_int("plot", "points", 400);
    if (!(x_max > 0.0) || points < 2) throw ConfigError("[plot] needs x_max > 0 and points >= 2");
    CsvTable table{"impact", {"x", "g", "h"}, {}};
    for (long long k = 1; k <= points; ++k) {
        const double x = x_max * static_cast<double>(k) / static_cast<double>(points);
        table.rows.push_back({x, m.g(x), m.h(x)});
    }
    const auto report = validate_s_shape(m);
    CommandOutput out;
    out.summary = {{"family", std::string(to_string(m.family()))},
                   {"x0_bar", m.threshold()},
                   {"h_at_x0_bar", m.h_at_threshold()},
                   {"shape",
                    {{"A1", report.a1.pass},
                     {"A2", report.a2.pass},
                     {"A3", report.a3.pass},
                     {"A4", report.a4.pass}}}};
    out.tables.push_back(std::move(table));
    return out;
}

using Handler = std::function<CommandOutput(const RunConfig&)>;

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> table{
        {"twap", cmd_twap},
        {"mixed-power", cmd_mixed_power},
        {"levy-nu", cmd_levy_nu},
        {"extreme-compare", cmd_extreme_compare},
        {"solve-hjb", cmd_solve_hjb},
        {"simulate", cmd_simulate},
        {"compare", cmd_compare},
        {"hamiltonian-check", cmd_hamiltonian_check},
        {"impact-plot", cmd_impact_plot},
    };
    return table;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << text;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int report_error(const RunConfig& config, int code, const std::string& kind,
                 const std::string& message, const std::string& hint, std::ostream& err) {
    err << "error (" << kind << "): " << message << '\n';
    if (!hint.empty()) err << "hint: " << hint << '\n';
    try {
        const auto dir = config.output_dir();
        fs::create_directories(dir);
        json report = {{"status", code}, {"kind", kind}, {"message", message}};
        if (!hint.empty()) report["hint"] = hint;
        write_file(dir / "error.json", report.dump(2) + "\n");
    } catch (...) {
    }
    return code;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [name, fn] : handlers()) out.push_back(name);
        return out;
    }();
    return names;
}

CommandOutput execute_command(const std::string& name, const RunConfig& config) {
    const auto it = handlers().find(name);
    if (it == handlers().end()) throw ConfigError("unknown subcommand '" + name + "'");
    return it->second(config);
}

std::string format_csv(const CsvTable& table) {
    std::string out;
    for (std::size_t k = 0; k < table.header.size(); ++k) {
        if (k) out += ',';
        out += table.header[k];
    }
    out += '\n';
    char buf[40];
    for (const auto& row : table.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k) out += ',';
            std::snprintf(buf, sizeof buf, "%.17g", row[k]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

int run_command(const std::string& name, RunConfig config, std::ostream& out, std::ostream& err) {
    try {
        config.set("run", "command", name);
        const auto result = execute_command(name, config);
        const auto dir = config.output_dir();
        fs::create_directories(dir);
        json summary = result.summary;
        summary["command"] = name;
        write_file(dir / "summary.json", summary.dump(2) + "\n");
        for (const auto& t : result.tables) write_file(dir / (t.name + ".csv"), format_csv(t));
        write_file(dir / "manifest.ini", config.to_ini());
        json manifest = {{"version", kVersion},
                         {"command", name},
                         {"timestamp", utc_timestamp()},
                         {"config", config.sections()}};
        write_file(dir / "manifest.json", manifest.dump(2) + "\n");
        out << summary.dump(2) << '\n';
        return kExitOk;
    } catch (const HypothesisViolation& e) {
        return report_error(config, kExitHypothesis, "hypothesis", e.what(), e.hint(), err);
    } catch (const NumericalFailure& e) {
        return report_error(config, kExitNumerical, "numerical", e.what(), "", err);
    } catch (const std::invalid_argument& e) {
        return report_error(config, kExitConfig, "config", e.what(), "", err);
    } catch (const std::out_of_range& e) {
        return report_error(config, kExitConfig, "config", e.what(), "", err);
    } catch (const std::exception& e) {
        return report_error(config, kExitNumerical, "numerical", e.what(), "", err);
    }
}

}  // namespace optexec
