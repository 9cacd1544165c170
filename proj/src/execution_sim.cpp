#include "optexec/execution_sim.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "optexec/errors.hpp"
#include "optexec/numerics.hpp"
#include "optexec/philox.hpp"

namespace optexec {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw InvalidArgument(message);
}

template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2 * threads) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned k = 0; k < threads; ++k) {
        const std::size_t begin = std::min(n, chunk * k);
        const std::size_t end = std::min(n, begin + chunk);
        if (begin < end) pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& th : pool) th.join();
}

TerminalStats summarize(std::vector<double> values) {
    TerminalStats out;
    const auto n = values.size();
    if (n == 0) return out;
    out.mean = numerics::pairwise_sum(values.begin(), values.end()) / static_cast<double>(n);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (values[i] - out.mean) * (values[i] - out.mean);
    out.variance = n > 1 ? numerics::pairwise_sum(sq.begin(), sq.end()) / static_cast<double>(n - 1)
                         : 0.0;
    std::sort(values.begin(), values.end());
    for (double level : out.quantile_levels) {
        const double pos = level * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, n - 1);
        const double frac = pos - static_cast<double>(lo);
        out.quantiles.push_back(values[lo] + frac * (values[hi] - values[lo]));
    }
    return out;
}

struct PathOutcome {
    double c = 0.0;
    double x = 0.0;
    double s = 0.0;
    bool absorbed = false;
};

// One Euler-Maruyama path in log-price. `observe(k, t, s, z, c, x, speed)`
// is called before each step and once at the end with speed 0.
template <class Observer>
PathOutcome run_path(const Strategy& strategy, const CoefficientSet& coeffs, const ImpactModel& m,
                     const SimConfig& cfg, std::size_t path, Observer&& observe) {
    NormalStream noise(cfg.seed, path);
    const double dt = cfg.horizon / static_cast<double>(cfg.n_steps);
    const double sqrt_dt = std::sqrt(dt);
    bool absorbed = cfg.s0 <= 0.0;
    bool z_absorbed = absorbed;
    double y = absorbed ? 0.0 : std::log(cfg.s0);
    double yz = y;
    double c = cfg.c0;
    double x = cfg.x0;
    for (std::size_t k = 0; k < cfg.n_steps; ++k) {
        const double t = dt * static_cast<double>(k);
        const double s = absorbed ? 0.0 : std::exp(y);
        double sell = 0.0;
        if (x > 0.0) {
            const double rate = strategy.speed(t, x, cfg.horizon);
            sell = std::min(std::max(rate, 0.0) * dt, x);
        }
        const double rate = sell / dt;
        observe(k, t, s, z_absorbed ? 0.0 : std::exp(yz), c, x, rate);
        c += sell * s;
        x = sell >= x ? 0.0 : x - sell;

        const double xi = noise.next();
        if (!absorbed) {
            y += (coeffs.drift(y) - m.g(rate)) * dt + coeffs.vol(y) * sqrt_dt * xi;
            if (!(y >= cfg.y_min)) absorbed = true;
        }
        if (!z_absorbed) {
            yz += coeffs.drift(yz) * dt + coeffs.vol(yz) * sqrt_dt * xi;
            if (!(yz >= cfg.y_min)) z_absorbed = true;
        }
    }
    const double s_end = absorbed ? 0.0 : std::exp(y);
    observe(cfg.n_steps, cfg.horizon, s_end, z_absorbed ? 0.0 : std::exp(yz), c, x, 0.0);
    return {c, x, s_end, absorbed};
}

void validate_config(const Strategy& strategy, const SimConfig& cfg) {
    require(cfg.n_paths >= 1 && cfg.n_steps >= 1, "simulate: n_paths and n_steps must be >= 1");
    require(cfg.x0 >= 0.0 && cfg.s0 >= 0.0 && cfg.horizon > 0.0,
            "simulate: x0, s0 must be non-negative and T positive");
    require(std::isfinite(cfg.c0), "simulate: c0 must be finite");
    const double h = strategy.horizon();
    if (std::abs(h - cfg.horizon) > 1e-12 * cfg.horizon) {
        throw InvalidArgument("simulate: strategy horizon does not match the problem horizon");
    }
}

struct PathArrays {
    std::vector<double> c, x, s, u;
    std::vector<char> absorbed;
};

PathArrays run_all(const Strategy& strategy, const CoefficientSet& coeffs, const ImpactModel& m,
                   const SimConfig& cfg, const UtilityFn& utility) {
    validate_config(strategy, cfg);
    const std::size_t n = cfg.n_paths;
    PathArrays out{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                   std::vector<double>(n), std::vector<char>(n)};
    const auto noop = [](auto&&...) {};
    parallel_for(n, cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const auto r = run_path(strategy, coeffs, m, cfg, p, noop);
            out.c[p] = r.c;
            out.x[p] = r.x;
            out.s[p] = r.s;
            out.u[p] = utility(r.c, r.x, r.s);
            out.absorbed[p] = r.absorbed ? 1 : 0;
        }
    });
    return out;
}

double mean_of(const std::vector<double>& v) {
    return numerics::pairwise_sum(v.begin(), v.end()) / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
    const double var = numerics::pairwise_sum(sq.begin(), sq.end()) / static_cast<double>(v.size() - 1);
    return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

// --- CoefficientSet ---------------------------------------------------------

CoefficientSet CoefficientSet::black_scholes(double mu, double sigma) {
    require(std::isfinite(mu), "black_scholes: mu must be finite");
    require(sigma >= 0.0 && std::isfinite(sigma), "black_scholes: sigma must be non-negative");
    CoefficientSet out;
    out.constant_ = true;
    out.mu_ = mu;
    out.sigma_ = sigma;
    out.drift_bound_ = std::abs(mu);
    out.vol_bound_ = sigma;
    return out;
}

CoefficientSet::CoefficientSet(Fn drift, Fn vol, double drift_bound, double vol_bound)
    : drift_(std::move(drift)), vol_(std::move(vol)), drift_bound_(drift_bound), vol_bound_(vol_bound) {
    require(static_cast<bool>(drift_) && static_cast<bool>(vol_),
            "CoefficientSet: drift and volatility functions are required");
    require(drift_bound >= 0.0 && vol_bound >= 0.0, "CoefficientSet: bounds must be non-negative");
    std::vector<double> ys;
    for (int k = -50; k <= 50; ++k) ys.push_back(static_cast<double>(k));
    check_bounds(ys);
}

void CoefficientSet::check_bounds(std::span<const double> ys) const {
    for (double y : ys) {
        const double b = drift(y);
        const double v = vol(y);
        if (!(std::abs(b) <= drift_bound_) || !(std::abs(v) <= vol_bound_)) {
            throw InvalidArgument("CoefficientSet: coefficient exceeds its declared bound at y = " +
                                  std::to_string(y));
        }
    }
}

// --- Strategy ---------------------------------------------------------------

Strategy Strategy::deterministic(Schedule schedule) {
    Strategy out;
    out.schedule_ = std::move(schedule);
    return out;
}

Strategy Strategy::feedback(std::shared_ptr<const ValueSurface> surface) {
    if (!surface || !surface->has_policy()) {
        throw InvalidArgument("feedback strategy needs a solved surface with a policy");
    }
    Strategy out;
    out.surface_ = std::move(surface);
    return out;
}

Strategy feedback_strategy_from_policy(std::shared_ptr<const ValueSurface> surface) {
    return Strategy::feedback(std::move(surface));
}

double Strategy::horizon() const noexcept {
    if (surface_) return surface_->horizon();
    return schedule_ ? schedule_->horizon() : 0.0;
}

double Strategy::speed(double t, double remaining, double horizon) const {
    if (!(remaining > 0.0)) return 0.0;
    if (!surface_) return schedule_->rate(t);

    // Bilinear weights over the four surrounding nodes. Nodes that do not
    // sell carry no rate; the cell sells when the selling nodes hold at least
    // half the weight, at the weighted mean of their rates. Every emitted
    // speed is therefore 0 or above x0_bar. The x = 0 column never sells, so
    // inventory below one cell is looked up on the first interior column.
    const ValueSurface& s = *surface_;
    const double tau = std::clamp(horizon - t, 0.0, s.horizon());
    const double x = std::clamp(remaining, s.dx(), s.x_max());
    const double ft = std::min(tau / s.dt(), static_cast<double>(s.nt()));
    const double fx = std::min(x / s.dx(), static_cast<double>(s.nx()));
    const auto n0 = std::min(static_cast<std::size_t>(ft), s.nt() - 1);
    const auto i0 = std::min(static_cast<std::size_t>(fx), s.nx() - 1);
    const double a = ft - static_cast<double>(n0);
    const double b = fx - static_cast<double>(i0);
    const double weights[4] = {(1 - a) * (1 - b), (1 - a) * b, a * (1 - b), a * b};
    const double rates[4] = {s.policy(n0, i0), s.policy(n0, i0 + 1), s.policy(n0 + 1, i0),
                             s.policy(n0 + 1, i0 + 1)};
    double selling_weight = 0.0;
    double weighted_rate = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (rates[k] > 0.0) {
            selling_weight += weights[k];
            weighted_rate += weights[k] * rates[k];
        }
    }
    if (selling_weight < 0.5) return 0.0;
    return weighted_rate / selling_weight;
}

// --- UtilityFn --------------------------------------------------------------

UtilityFn UtilityFn::risk_neutral() { return UtilityFn{}; }

UtilityFn UtilityFn::custom(Fn fn, double growth_degree) {
    require(static_cast<bool>(fn), "UtilityFn::custom: function is empty");
    require(growth_degree >= 0.0, "UtilityFn::custom: growth degree must be non-negative");
    const double lattice[] = {0.0, 1.0, 10.0};
    for (double c : lattice) {
        for (double x : lattice) {
            for (double s : lattice) {
                const double u = fn(c, x, s);
                if (!std::isfinite(u)) throw InvalidArgument("UtilityFn::custom: non-finite value");
                if (fn(c + 1.0, x, s) < u || fn(c, x + 1.0, s) < u || fn(c, x, s + 1.0) < u) {
                    throw InvalidArgument("UtilityFn::custom: utility is not non-decreasing");
                }
            }
        }
    }
    const double base = 1.0 + std::abs(fn(1.0, 1.0, 1.0));
    const double big = 1e3;
    if (std::abs(fn(big, big, big)) > 1e3 * base * std::pow(1.0 + 3.0 * big, growth_degree)) {
        throw InvalidArgument("UtilityFn::custom: growth exceeds the declared degree");
    }
    UtilityFn out;
    out.fn_ = std::move(fn);
    return out;
}

// --- Simulation --------------------------------------------------------------

SimResult simulate(const Strategy& strategy, const CoefficientSet& coeffs, const ImpactModel& m,
                   const SimConfig& config, const UtilityFn& utility) {
    const auto arrays = run_all(strategy, coeffs, m, config, utility);
    SimResult out;
    out.n_paths = config.n_paths;
    out.mean_utility = mean_of(arrays.u);
    out.std_error = std_error_of(arrays.u, out.mean_utility);
    out.c_stats = summarize(arrays.c);
    out.x_stats = summarize(arrays.x);
    out.s_stats = summarize(arrays.s);
    out.absorption_count = static_cast<std::size_t>(
        std::count(arrays.absorbed.begin(), arrays.absorbed.end(), char{1}));
    const std::size_t keep = std::min(config.keep_paths, config.n_paths);
    for (std::size_t p = 0; p < keep; ++p) {
        out.paths.push_back({p, arrays.c[p], arrays.x[p], arrays.s[p], arrays.u[p],
                             arrays.absorbed[p] != 0});
    }
    return out;
}

UnimpactedResult simulate_unimpacted(const CoefficientSet& coeffs, double s0, double horizon,
                                     std::size_t n_paths, std::size_t n_steps, std::uint64_t seed,
                                     unsigned threads) {
    SimConfig cfg;
    cfg.s0 = s0;
    cfg.horizon = horizon;
    cfg.n_paths = n_paths;
    cfg.n_steps = n_steps;
    cfg.seed = seed;
    cfg.threads = threads;
    const auto idle = Strategy::deterministic(Schedule::zero(horizon));
    validate_config(idle, cfg);
    // Impact never enters the unimpacted price, so any model works here.
    const auto dummy = ImpactModel::quadratic(1.0);
    std::vector<double> z(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            double z_end = 0.0;
            run_path(idle, coeffs, dummy, cfg, p,
                     [&](std::size_t k, double, double, double zv, double, double, double) {
                         if (k == n_steps) z_end = zv;
                     });
            z[p] = z_end;
        }
    });
    UnimpactedResult out;
    out.n_paths = n_paths;
    out.z_stats = summarize(z);
    out.std_error = std::sqrt(out.z_stats.variance / static_cast<double>(n_paths));
    return out;
}

PathTrace trace_path(const Strategy& strategy, const CoefficientSet& coeffs, const ImpactModel& m,
                     const SimConfig& config, std::size_t path_index) {
    validate_config(strategy, config);
    PathTrace out;
    run_path(strategy, coeffs, m, config, path_index,
             [&](std::size_t, double t, double s, double z, double c, double x, double speed) {
                 out.t.push_back(t);
                 out.s.push_back(s);
                 out.z.push_back(z);
                 out.c.push_back(c);
                 out.x.push_back(x);
                 out.speed.push_back(speed);
             });
    return out;
}

ComparisonTable compare_strategies(std::span<const NamedStrategy> strategies,
                                   const CoefficientSet& coeffs, const ImpactModel& m,
                                   const SimConfig& config, const UtilityFn& utility) {
    require(strategies.size() >= 2, "compare_strategies: need at least two strategies");
    for (const auto& s : strategies) {
        if (std::abs(s.strategy.horizon() - config.horizon) > 1e-12 * config.horizon) {
            throw InvalidArgument("compare_strategies: strategy '" + s.name +
                                  "' has a different horizon");
        }
    }
    std::vector<std::vector<double>> utilities;
    ComparisonTable table;
    for (const auto& s : strategies) {
        auto arrays = run_all(s.strategy, coeffs, m, config, utility);
        const double mean = mean_of(arrays.u);
        table.strategies.push_back({s.name, mean, std_error_of(arrays.u, mean)});
        utilities.push_back(std::move(arrays.u));
    }
    for (std::size_t i = 0; i < strategies.size(); ++i) {
        for (std::size_t j = i + 1; j < strategies.size(); ++j) {
            std::vector<double> diff(config.n_paths);
            for (std::size_t p = 0; p < config.n_paths; ++p) diff[p] = utilities[i][p] - utilities[j][p];
            const double mean = mean_of(diff);
            table.differences.push_back({i, j, mean, std_error_of(diff, mean)});
        }
    }
    table.ranking.resize(strategies.size());
    for (std::size_t i = 0; i < strategies.size(); ++i) table.ranking[i] = i;
    std::stable_sort(table.ranking.begin(), table.ranking.end(), [&](auto a, auto b) {
        return table.strategies[a].mean > table.strategies[b].mean;
    });
    return table;
}

}  // namespace optexec
