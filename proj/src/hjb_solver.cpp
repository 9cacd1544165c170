#include "optexec/hjb_solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "optexec/errors.hpp"
#include "optexec/hamiltonian.hpp"
#include "optexec/numerics.hpp"

namespace optexec {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw InvalidArgument(message);
}

// Maximizer over [0, y_max] of y (1 - wx) - w g(y).
double node_control(double w, double wx, const ImpactModel& m, double y_max,
                    const HjbOptions& options) {
    if (w > options.w_eps) {
        return xi_truncated(1.0, Gradient{1.0, wx, w}, m, y_max);
    }
    // Degenerate ratio: search {0} and a uniform grid on (x0_bar, y_max].
    // The optimum never lies in (0, x0_bar].
    const double x0 = m.threshold();
    const int n = std::max(options.fallback_points, 2);
    double best_y = 0.0;
    double best = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double y = x0 + (y_max - x0) * k / n;
        const double v = y * (1.0 - wx) - w * m.g(y);
        if (v > best) {
            best = v;
            best_y = y;
        }
    }
    return best_y;
}

double node_rate(double w, double wx, double y, const ImpactModel& m, double mu_tilde) {
    return y * (1.0 - wx) - w * (mu_tilde + m.g(y));
}

ValueSurface solve_fixed(const ImpactModel& m, double mu_tilde, double horizon, double x_max,
                         double y_max, const HjbOptions& options) {
    require(options.nt >= 2 && options.nx >= 2, "solve_reduced_hjb: nt and nx must be >= 2");
    require(horizon > 0.0 && std::isfinite(horizon), "solve_reduced_hjb: T must be positive");
    require(x_max > 0.0 && std::isfinite(x_max), "solve_reduced_hjb: x_max must be positive");
    require(std::isfinite(mu_tilde), "solve_reduced_hjb: mu_tilde must be finite");
    if (!(y_max > m.threshold()) || !std::isfinite(y_max)) {
        throw InvalidArgument("solve_reduced_hjb: y_max must exceed x0_bar");
    }
    if (m.violates_a4()) {
        throw A4Violation("solve_reduced_hjb: the feedback map needs h -> infinity");
    }

    ValueSurface surface(horizon, x_max, options.nt, options.nx);
    surface.y_max = y_max;
    surface.x0_bar = m.threshold();
    surface.mu_tilde = mu_tilde;

    const std::size_t nx = options.nx;
    const double dx = surface.dx();
    const double dt_out = surface.dt();
    const double speed = y_max / dx + std::max(mu_tilde, 0.0) + m.g(y_max);
    const auto substeps = static_cast<std::size_t>(std::ceil(dt_out * speed));
    surface.substeps = std::max<std::size_t>(substeps, 1);
    const double dt = dt_out / static_cast<double>(surface.substeps);
    const double bound_factor = options.growth_limit * std::exp(std::abs(mu_tilde) * horizon);

    std::vector<double> cur(nx + 1, 0.0);
    std::vector<double> next(nx + 1, 0.0);
    for (std::size_t n = 1; n <= options.nt; ++n) {
        for (std::size_t k = 0; k < surface.substeps; ++k) {
            next[0] = 0.0;
            for (std::size_t i = 1; i <= nx; ++i) {
                next[i] = upwind_update(cur[i], cur[i - 1], dx, dt, m, mu_tilde, y_max, options);
            }
            cur.swap(next);
        }
        for (std::size_t i = 0; i <= nx; ++i) {
            const double bound = bound_factor * (surface.x_at(i) + dx);
            if (!std::isfinite(cur[i]) || std::abs(cur[i]) > bound) {
                throw NumericalFailure("solve_reduced_hjb: value growth guard tripped");
            }
            surface.w(n, i) = cur[i];
        }
    }

    const auto policy = extract_policy(surface, m, options);
    std::size_t saturated = 0;
    for (std::size_t n = 0; n <= options.nt; ++n) {
        for (std::size_t i = 0; i <= nx; ++i) {
            const double y = policy[n * (nx + 1) + i];
            surface.policy(n, i) = y;
            if (y >= y_max) ++saturated;
        }
    }
    surface.set_has_policy(true);
    surface.saturation_fraction =
        static_cast<double>(saturated) / static_cast<double>(options.nt * options.nx);
    return surface;
}

}  // namespace

double upwind_update(double w, double w_left, double dx, double dt, const ImpactModel& m,
                     double mu_tilde, double y_max, const HjbOptions& options) {
    const double wx = (w - w_left) / dx;
    const double y = node_control(w, wx, m, y_max, options);
    return w + dt * node_rate(w, wx, y, m, mu_tilde);
}

ValueSurface::ValueSurface(double horizon, double x_max, std::size_t nt, std::size_t nx)
    : horizon_(horizon),
      x_max_(x_max),
      nt_(nt),
      nx_(nx),
      w_((nt + 1) * (nx + 1), 0.0),
      policy_((nt + 1) * (nx + 1), 0.0) {}

double ValueSurface::interpolate(double t, double x) const {
    if (!(t >= 0.0 && t <= horizon_ && x >= 0.0 && x <= x_max_)) {
        throw InvalidArgument("ValueSurface: query outside the grid");
    }
    const double ft = std::min(t / dt(), static_cast<double>(nt_));
    const double fx = std::min(x / dx(), static_cast<double>(nx_));
    const auto n0 = std::min(static_cast<std::size_t>(ft), nt_ - 1);
    const auto i0 = std::min(static_cast<std::size_t>(fx), nx_ - 1);
    const double a = ft - static_cast<double>(n0);
    const double b = fx - static_cast<double>(i0);
    return (1 - a) * (1 - b) * w(n0, i0) + (1 - a) * b * w(n0, i0 + 1) +
           a * (1 - b) * w(n0 + 1, i0) + a * b * w(n0 + 1, i0 + 1);
}

double default_y_max(const ImpactModel& m, double mu_tilde, double horizon, double x_max) {
    double y = std::max(4.0 * x_max / horizon, 2.0 * m.threshold() + 1.0);
    if (mu_tilde > 0.0 && !m.violates_a4()) y = std::max(y, 4.0 * nu_h(m, mu_tilde));
    return y;
}

ValueSurface solve_reduced_hjb(const ImpactModel& m, double mu_tilde, double horizon, double x_max,
                               const HjbOptions& options) {
    double y_max = options.y_max > 0.0 ? options.y_max
                                       : default_y_max(m, mu_tilde, horizon, x_max);
    for (int doublings = 0;; ++doublings) {
        auto surface = solve_fixed(m, mu_tilde, horizon, x_max, y_max, options);
        surface.y_max_doublings = doublings;
        if (surface.saturation_fraction <= options.saturation_tol ||
            doublings >= options.max_doublings) {
            return surface;
        }
        y_max *= 2.0;
    }
}

ValueSurface solve_reduced_hjb(const ImpactModel& m, double mu_tilde, double horizon, double x_max,
                               std::size_t nt, std::size_t nx, double y_max) {
    HjbOptions options;
    options.nt = nt;
    options.nx = nx;
    return solve_fixed(m, mu_tilde, horizon, x_max, y_max, options);
}

std::vector<double> extract_policy(const ValueSurface& surface, const ImpactModel& m,
                                   const HjbOptions& options) {
    const std::size_t nt = surface.nt();
    const std::size_t nx = surface.nx();
    const double dx = surface.dx();
    std::vector<double> policy((nt + 1) * (nx + 1), 0.0);
    // Row n = 0 has no time left and column i = 0 has nothing to sell.
    for (std::size_t n = 1; n <= nt; ++n) {
        for (std::size_t i = 1; i <= nx; ++i) {
            const double w = surface.w(n, i);
            const double wx = (w - surface.w(n, i - 1)) / dx;
            policy[n * (nx + 1) + i] = node_control(w, wx, m, surface.y_max, options);
        }
    }
    return policy;
}

double full_value_from_reduced(double c, double s, const ValueSurface& surface, double t, double x) {
    require(s >= 0.0, "full_value_from_reduced: s must be non-negative");
    return c + s * surface.interpolate(t, x);
}

double hjb_residual(const ValueSurface& surface, const ImpactModel& m, double mu_tilde,
                    const HjbOptions& options) {
    const double dx = surface.dx();
    const double dt = surface.dt();
    double worst = 0.0;
    for (std::size_t n = 1; n <= surface.nt(); ++n) {
        if (surface.t_at(n) < options.residual_t_min) continue;
        for (std::size_t i = 1; i <= surface.nx(); ++i) {
            const double w = surface.w(n, i);
            const double wx = (w - surface.w(n, i - 1)) / dx;
            const double y = node_control(w, wx, m, surface.y_max, options);
            const double lhs = (w - surface.w(n - 1, i)) / dt;
            worst = std::max(worst, std::abs(lhs - node_rate(w, wx, y, m, mu_tilde)));
        }
    }
    return worst;
}

// --- Deterministic schedule search ---------------------------------------------

namespace {

double piecewise_objective(const std::vector<double>& rates, double width, const ImpactModel& m,
                           double mu_tilde) {
    double value = 0.0;
    double log_discount = 0.0;
    for (double r : rates) {
        r = std::max(r, 0.0);
        const double coef = mu_tilde + m.g(r);
        const double piece = coef == 0.0 ? width : -std::expm1(-coef * width) / coef;
        value += std::exp(-log_discount) * r * piece;
        log_discount += coef * width;
    }
    return value;
}

// Maps an unconstrained vector onto feasible rates: absolute values, scaled
// down when the total exceeds x0.
std::vector<double> project(const std::vector<double>& u, double width, double x0) {
    std::vector<double> r(u.size());
    double total = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        r[i] = std::abs(u[i]);
        total += r[i] * width;
    }
    if (total > x0 && total > 0.0) {
        const double scale = x0 / total;
        for (double& v : r) v *= scale;
    }
    return r;
}

}  // namespace

DeterministicOptimum optimize_deterministic_schedule(const ImpactModel& m, double mu_tilde,
                                                     double horizon, double x0, int n_pieces,
                                                     const ScheduleSearchOptions& options) {
    require(n_pieces >= 1, "optimize_deterministic_schedule: n_pieces must be >= 1");
    require(horizon > 0.0, "optimize_deterministic_schedule: T must be positive");
    require(x0 >= 0.0, "optimize_deterministic_schedule: x0 must be non-negative");
    DeterministicOptimum out;
    const auto n = static_cast<std::size_t>(n_pieces);
    if (x0 == 0.0) {
        out.schedule = Schedule::piecewise_constant(std::vector<double>(n, 0.0), horizon);
        return out;
    }
    const double width = horizon / static_cast<double>(n);
    const double scale = x0 / horizon;
    int evals = 0;
    const auto phi = [&](const std::vector<double>& rates) {
        ++evals;
        return piecewise_objective(rates, width, m, mu_tilde);
    };

    std::vector<std::vector<double>> starts;
    starts.emplace_back(n, scale);
    {
        std::vector<double> front(n, 0.0);
        const std::size_t half = (n + 1) / 2;
        for (std::size_t i = 0; i < half; ++i) front[i] = x0 / (width * static_cast<double>(half));
        starts.push_back(front);
    }
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unif(0.0, 2.0);
    while (static_cast<int>(starts.size()) < std::max(options.starts, 1)) {
        std::vector<double> r(n);
        for (double& v : r) v = unif(rng) * scale;
        starts.push_back(std::move(r));
    }

    std::vector<double> best_rates(n, 0.0);
    double best_value = -INFINITY;
    for (const auto& start : starts) {
        const auto result = numerics::nelder_mead(
            [&](const std::vector<double>& u) { return -phi(project(u, width, x0)); }, start,
            0.25 * scale, options.nelder_mead_iterations, 1e-15);
        auto rates = project(result.x, width, x0);
        double value = phi(rates);

        // Polish: single-piece moves into unused capacity and pairwise
        // transfers that keep the total fixed.
        for (int sweep = 0; sweep < options.polish_sweeps; ++sweep) {
            const double before = value;
            for (std::size_t i = 0; i < n; ++i) {
                double used = 0.0;
                for (double r : rates) used += r * width;
                const double room = std::max(0.0, x0 - used) / width;
                const double lo = 0.0;
                const double hi = rates[i] + room;
                if (hi > lo) {
                    const double keep = rates[i];
                    const auto [y, v] = numerics::golden_minimize(
                        [&](double r) {
                            rates[i] = r;
                            return -phi(rates);
                        },
                        lo, hi, 1e-12 * std::max(1.0, hi));
                    rates[i] = -v > value ? y : keep;
                    value = std::max(value, -v);
                }
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const double ri = rates[i];
                    const double rj = rates[j];
                    const auto [shift, v] = numerics::golden_minimize(
                        [&](double d) {
                            rates[i] = ri + d;
                            rates[j] = rj - d;
                            return -phi(rates);
                        },
                        -ri, rj, 1e-12 * std::max(1.0, ri + rj));
                    if (-v > value) {
                        rates[i] = ri + shift;
                        rates[j] = rj - shift;
                        value = -v;
                    } else {
                        rates[i] = ri;
                        rates[j] = rj;
                    }
                }
            }
            if (value - before <= 1e-15 * std::abs(value)) break;
        }
        if (value > best_value) {
            best_value = value;
            best_rates = rates;
        }
    }
    for (double& r : best_rates) r = std::max(r, 0.0);
    out.value = phi(best_rates);
    out.schedule = Schedule::piecewise_constant(best_rates, horizon);
    out.evaluations = evals;
    return out;
}

}  // namespace optexec
