#include "optexec/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "optexec/errors.hpp"
#include "optexec/numerics.hpp"

namespace optexec {

namespace {

void require(bool ok, const char* message) {
    if (!ok) throw InvalidArgument(message);
}

void require_horizon(double horizon) {
    require(horizon > 0.0 && std::isfinite(horizon), "horizon T must be positive");
}

}  // namespace

MarketParams MarketParams::from_mu_sigma(double mu, double sigma) {
    require(std::isfinite(mu), "mu must be finite");
    require(sigma >= 0.0 && std::isfinite(sigma), "sigma must be non-negative");
    return MarketParams(mu, sigma, -mu - 0.5 * sigma * sigma);
}

MarketParams MarketParams::from_mu_tilde(double mu_tilde, double sigma) {
    require(std::isfinite(mu_tilde), "mu_tilde must be finite");
    require(sigma >= 0.0 && std::isfinite(sigma), "sigma must be non-negative");
    return MarketParams(-mu_tilde - 0.5 * sigma * sigma, sigma, mu_tilde);
}

// --- Schedule ---------------------------------------------------------------

Schedule Schedule::constant_until(double rate, double stop, double horizon) {
    require_horizon(horizon);
    require(rate >= 0.0 && std::isfinite(rate), "schedule rate must be non-negative");
    require(stop >= 0.0, "schedule stop time must be non-negative");
    stop = std::min(stop, horizon);
    std::vector<Segment> segs{{0.0, rate}};
    if (stop < horizon) segs.push_back({stop, 0.0});
    auto fn = [rate, stop](double t) { return t < stop ? rate : 0.0; };
    return Schedule(fn, horizon, rate * stop, std::move(segs));
}

Schedule Schedule::zero(double horizon) { return constant_until(0.0, 0.0, horizon); }

Schedule Schedule::piecewise_constant(std::vector<double> rates, double horizon) {
    require_horizon(horizon);
    require(!rates.empty(), "piecewise schedule needs at least one piece");
    const double width = horizon / static_cast<double>(rates.size());
    std::vector<Segment> segs;
    segs.reserve(rates.size());
    double total = 0.0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        require(rates[i] >= 0.0 && std::isfinite(rates[i]), "schedule rates must be non-negative");
        segs.push_back({width * static_cast<double>(i), rates[i]});
        total += rates[i] * width;
    }
    auto fn = [rates = std::move(rates), width](double t) {
        const auto i = static_cast<std::size_t>(std::max(0.0, std::floor(t / width)));
        return i < rates.size() ? rates[i] : 0.0;
    };
    return Schedule(fn, horizon, total, std::move(segs));
}

Schedule Schedule::from_function(RateFn rate, double horizon, double total) {
    require_horizon(horizon);
    require(static_cast<bool>(rate), "schedule rate function is empty");
    return Schedule(std::move(rate), horizon, total, std::nullopt);
}

double Schedule::rate(double t) const {
    if (t < 0.0 || t >= horizon_) return 0.0;
    return rate_(t);
}

std::vector<double> Schedule::sample(int n) const {
    require(n >= 1, "sample: need at least one piece");
    std::vector<double> out(static_cast<std::size_t>(n));
    const double width = horizon_ / n;
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = rate(width * i);
    return out;
}

// --- TWAP ------------------------------------------------------------------

double iota(double y, double x) {
    if (y == 0.0) return x;
    return -std::expm1(-x * y) / y;
}

double nu_h(const ImpactModel& m, double mu_tilde) {
    if (m.violates_a4()) {
        throw A4Violation("nu_h: G_h vanishes identically for linear impact; no TWAP speed exists");
    }
    require(mu_tilde > 0.0 && std::isfinite(mu_tilde), "nu_h: mu_tilde must be positive");
    const auto big_g = [&m](double x) { return x > 0.0 ? m.big_g(x) : 0.0; };
    const double x0 = m.threshold();
    const double nu = numerics::solve_increasing(big_g, mu_tilde, x0);
    if (!(nu > x0)) throw NumericalFailure("nu_h: root collapsed onto x0_bar");
    return nu;
}

double twap_value(double c0, double x0, double s0, double marginal) {
    return c0 + s0 * iota(marginal, x0);
}

TwapSolution twap_solution(double c0, double x0, double s0, const ImpactModel& m,
                           double mu_tilde, double horizon) {
    require(x0 >= 0.0 && std::isfinite(x0), "twap: x0 must be non-negative");
    require(s0 >= 0.0 && std::isfinite(s0), "twap: s0 must be non-negative");
    require_horizon(horizon);
    TwapSolution out;
    out.nu = nu_h(m, mu_tilde);
    if (x0 > out.nu * horizon) {
        throw HypothesisViolation("small-inventory hypothesis violated: x0 > nu_h * T",
                                  "use the HJB solver (solve-hjb) for this inventory");
    }
    out.marginal = m.h(out.nu);
    out.value = twap_value(c0, x0, s0, out.marginal);
    out.schedule = Schedule::constant_until(out.nu, x0 / out.nu, horizon);
    return out;
}

// --- Incomplete Beta -------------------------------------------------------

namespace {

// w_lo = 1 - z, passed separately so z may round to 1 in double precision.
double incomplete_beta_impl(double z, double w_lo, double a, double b) {
    if (z == 0.0) return 0.0;
    require(a < 2.0, "incomplete_beta: the integral diverges at 0 for a >= 2");

    constexpr double tol = 1e-13;
    const double split = std::min(z, 0.5);
    double total = 0.0;

    // [0, split]: for a > 1 the substitution x = u^k with k = 1/(2 - a)
    // cancels the x^(1-a) singularity exactly.
    if (a > 1.0) {
        const double k = 1.0 / (2.0 - a);
        const auto f = [k, b](double u) { return k * std::pow(1.0 - std::pow(u, k), 1.0 - b); };
        total += numerics::integrate(f, 0.0, std::pow(split, 1.0 / k), tol).value;
    } else {
        const auto f = [a, b](double x) { return std::pow(x, 1.0 - a) * std::pow(1.0 - x, 1.0 - b); };
        total += numerics::integrate(f, 0.0, split, tol).value;
    }

    // [split, z] in w = 1 - x.
    if (z > split) {
        const double w_hi = 1.0 - split;
        if (b >= 2.0) {
            // w = e^v; the integrand becomes smooth in v.
            const auto f = [a, b](double v) {
                const double w = std::exp(v);
                return std::pow(1.0 - w, 1.0 - a) * std::pow(w, 2.0 - b);
            };
            total += numerics::integrate(f, std::log(w_lo), std::log(w_hi), tol).value;
        } else if (b > 1.0) {
            const double k = 1.0 / (2.0 - b);
            const auto f = [k, a](double v) { return k * std::pow(1.0 - std::pow(v, k), 1.0 - a); };
            total += numerics::integrate(f, std::pow(w_lo, 1.0 / k), std::pow(w_hi, 1.0 / k), tol).value;
        } else {
            const auto f = [a, b](double w) { return std::pow(1.0 - w, 1.0 - a) * std::pow(w, 1.0 - b); };
            total += numerics::integrate(f, w_lo, w_hi, tol).value;
        }
    }
    return total;
}

}  // namespace

double incomplete_beta(double z, double a, double b) {
    require(a > 0.0 && b > 0.0, "incomplete_beta: a and b must be positive");
    require(z >= 0.0, "incomplete_beta: z must be non-negative");
    require(z < 1.0 || (z == 1.0 && b < 2.0),
            "incomplete_beta: z must be below 1 (the integral diverges at 1 for b >= 2)");
    return incomplete_beta_impl(z, 1.0 - z, a, b);
}

// --- Mixed power -----------------------------------------------------------

std::string_view to_string(MixedPowerRegime regime) {
    switch (regime) {
        case MixedPowerRegime::LargeInventory: return "large_inventory";
        case MixedPowerRegime::SmallInventory: return "small_inventory";
        case MixedPowerRegime::Unsolved: return "unsolved";
    }
    return "unknown";
}

MixedPowerSolution mixed_power_solution(double c0, double x0, double s0, const ImpactModel& m,
                                        double mu_tilde, double horizon) {
    const auto* p = std::get_if<MixedPowerParams>(&m.params());
    if (p == nullptr) throw InvalidArgument("mixed_power_solution: requires a mixed-power model");
    require(mu_tilde > 0.0 && std::isfinite(mu_tilde), "mixed_power_solution: mu_tilde must be positive");
    require(x0 >= 0.0 && s0 >= 0.0, "mixed_power_solution: x0 and s0 must be non-negative");
    require_horizon(horizon);

    const double pi = p->pi;
    const double drift = mu_tilde + p->gamma;
    const double rate_k = pi / (pi - 1.0) * drift;

    MixedPowerSolution out;
    out.delta = std::pow(p->alpha, 1.0 / pi) * pi * std::pow(drift / (pi - 1.0), (pi - 1.0) / pi);
    out.nu = std::pow(drift / ((pi - 1.0) * p->alpha), 1.0 / pi);
    const double z = -std::expm1(-rate_k * horizon);
    const double tail = std::exp(-rate_k * horizon);
    out.x_star_1 = tail > 0.0 ? incomplete_beta_impl(z, tail, 1.0 / pi + 1.0, 2.0) / out.delta
                              : std::numeric_limits<double>::infinity();
    out.x_star_2 = out.nu * horizon;

    if (x0 >= out.x_star_1) {
        out.regime = MixedPowerRegime::LargeInventory;
        out.value = c0 + s0 / out.delta * std::pow(z, (pi - 1.0) / pi);
        const double nu = out.nu;
        out.schedule = Schedule::from_function(
            [nu, rate_k, pi, horizon](double t) {
                return nu * std::pow(-std::expm1(-rate_k * (horizon - t)), -1.0 / pi);
            },
            horizon, out.x_star_1);
    } else if (x0 <= out.x_star_2) {
        out.regime = MixedPowerRegime::SmallInventory;
        out.value = twap_value(c0, x0, s0, out.delta);
        out.schedule = Schedule::constant_until(out.nu, x0 / out.nu, horizon);
    } else {
        out.regime = MixedPowerRegime::Unsolved;
    }
    return out;
}

// --- Gamma-subordinated impact -----------------------------------------------

double levy_speed_equation(double gamma, double alpha0, double alpha1, double beta1, double x) {
    const double u = alpha0 * beta1 * x * x;
    return gamma * alpha0 * x * x + alpha1 * (2.0 * (1.0 - 1.0 / (1.0 + u)) - std::log1p(u));
}

double levy_nu_hat(double gamma, double alpha0, double alpha1, double beta1, double mu_tilde) {
    const auto model = ImpactModel::levy_effective(gamma, alpha0, alpha1, beta1);
    return nu_h(model, mu_tilde);
}

// --- Extreme impact comparison -----------------------------------------------

ExtremeComparison extreme_comparison(const ImpactModel& m, double x0, double s0, double mu_tilde,
                                     double horizon) {
    if (m.family() != ImpactFamily::ShiftedConvex) {
        throw InvalidArgument("extreme_comparison: requires a shifted-convex model");
    }
    require(x0 > 0.0 && s0 > 0.0, "extreme_comparison: x0 and s0 must be positive");
    require_horizon(horizon);
    ExtremeComparison out;
    out.nu = nu_h(m, mu_tilde);
    const double x0_bar = m.threshold();
    if (x0 > out.nu * horizon || x0 > x0_bar * horizon) {
        throw HypothesisViolation("extreme comparison needs x0 <= nu_h T and x0 <= x0_bar T",
                                  "shorten x0 or lengthen T");
    }
    out.marginal = m.h(out.nu);
    out.c_hat = s0 * iota(out.marginal, x0);
    out.c_tilde = s0 * iota(mu_tilde / x0_bar, x0);
    return out;
}

// --- Linear impact ---------------------------------------------------------

QuasiBlockValues linear_quasi_block(double alpha, double mu_tilde, double c0, double x0,
                                    double s0, double delta) {
    require(alpha > 0.0, "linear_quasi_block: alpha must be positive");
    require(delta > 0.0, "linear_quasi_block: delta must be positive");
    require(x0 >= 0.0 && s0 >= 0.0, "linear_quasi_block: x0 and s0 must be non-negative");
    QuasiBlockValues out;
    out.value_limit = c0 + s0 * iota(alpha, x0);
    const double rate = x0 / delta;
    const auto f = [&](double t) { return std::exp(-mu_tilde * t - alpha * rate * t) * rate; };
    out.value_at_delta = c0 + s0 * numerics::integrate(f, 0.0, delta, 1e-13).value;
    return out;
}

// --- Deterministic objective -------------------------------------------------

double schedule_objective(const Schedule& schedule, const ImpactModel& m, double mu_tilde) {
    const double horizon = schedule.horizon();
    if (const auto& segs = schedule.segments()) {
        double value = 0.0;
        double log_discount = 0.0;  // mu_tilde r + integral g
        for (std::size_t i = 0; i < segs->size(); ++i) {
            const double a = (*segs)[i].start;
            const double b = i + 1 < segs->size() ? (*segs)[i + 1].start : horizon;
            const double r = (*segs)[i].rate;
            const double width = b - a;
            if (width <= 0.0) continue;
            const double coef = mu_tilde + m.g(r);
            const double piece = coef == 0.0 ? width : -std::expm1(-coef * width) / coef;
            value += std::exp(-log_discount) * r * piece;
            log_discount += coef * width;
        }
        return value;
    }

    // General rate function: panel-wise nested Gauss-Kronrod.
    constexpr int panels = 256;
    const double width = horizon / panels;
    double value = 0.0;
    double impact_acc = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double a = width * k;
        const double b = a + width;
        const auto g_of = [&](double t) { return m.g(schedule.rate(t)); };
        const auto outer = [&](double r) {
            const double inner = numerics::integrate(g_of, a, r, 1e-10).value;
            return std::exp(-mu_tilde * r - impact_acc - inner) * schedule.rate(r);
        };
        value += numerics::integrate(outer, a, b, 1e-10).value;
        impact_acc += numerics::integrate(g_of, a, b, 1e-10).value;
    }
    return value;
}

}  // namespace optexec
