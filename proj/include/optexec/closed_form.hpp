#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "optexec/impact_model.hpp"

namespace optexec {

/// Black-Scholes log-drift and volatility with the effective decay rate
/// mu_tilde = -mu - sigma^2 / 2 of the expected price.
class MarketParams {
public:
    static MarketParams from_mu_sigma(double mu, double sigma);
    static MarketParams from_mu_tilde(double mu_tilde, double sigma = 0.0);

    double mu() const noexcept { return mu_; }
    double sigma() const noexcept { return sigma_; }
    double mu_tilde() const noexcept { return mu_tilde_; }

private:
    MarketParams(double mu, double sigma, double mu_tilde)
        : mu_(mu), sigma_(sigma), mu_tilde_(mu_tilde) {}

    double mu_;
    double sigma_;
    double mu_tilde_;
};

/// A deterministic, non-negative liquidation-rate path on [0, T].
class Schedule {
public:
    using RateFn = std::function<double(double)>;

    /// Sells at `rate` on [0, stop) and nothing afterwards.
    static Schedule constant_until(double rate, double stop, double horizon);
    static Schedule zero(double horizon);
    /// Equal-width pieces covering [0, horizon].
    static Schedule piecewise_constant(std::vector<double> rates, double horizon);
    /// Closed-form rate; `total` is the exact integral of the rate on [0, T].
    static Schedule from_function(RateFn rate, double horizon, double total);

    double rate(double t) const;
    double horizon() const noexcept { return horizon_; }
    double total() const noexcept { return total_; }

    /// Left-point piecewise-constant sample with n pieces.
    std::vector<double> sample(int n) const;

    /// (start, rate) pairs when the schedule is piecewise constant.
    struct Segment {
        double start;
        double rate;
    };
    const std::optional<std::vector<Segment>>& segments() const noexcept { return segments_; }

private:
    Schedule(RateFn rate, double horizon, double total,
             std::optional<std::vector<Segment>> segments)
        : rate_(std::move(rate)), horizon_(horizon), total_(total), segments_(std::move(segments)) {}

    RateFn rate_;
    double horizon_;
    double total_;
    std::optional<std::vector<Segment>> segments_;
};

/// iota(y; x) = (1 - exp(-x y)) / y with iota(0; x) = x.
double iota(double y, double x);

/// Unique root nu_h > x0_bar of G_h(x) = mu_tilde.
double nu_h(const ImpactModel& m, double mu_tilde);

struct TwapSolution {
    double value = 0.0;
    double nu = 0.0;
    double marginal = 0.0;  // h(nu_h)
    Schedule schedule = Schedule::zero(1.0);
};

/// Optimal value and schedule for small inventory, x0 <= nu_h T.
TwapSolution twap_solution(double c0, double x0, double s0, const ImpactModel& m,
                           double mu_tilde, double horizon);

/// c0 + s0 * iota(marginal; x0): the TWAP value with a given marginal impact
/// at the selling speed.
double twap_value(double c0, double x0, double s0, double marginal);

/// B(z; a, b) = integral_0^z x^(1-a) (1-x)^(1-b) dx, the reciprocal-integrand
/// incomplete Beta function.
double incomplete_beta(double z, double a, double b);

enum class MixedPowerRegime { LargeInventory, SmallInventory, Unsolved };
std::string_view to_string(MixedPowerRegime regime);

struct MixedPowerSolution {
    MixedPowerRegime regime = MixedPowerRegime::Unsolved;
    std::optional<double> value;
    std::optional<Schedule> schedule;
    double x_star_1 = 0.0;
    double x_star_2 = 0.0;
    double delta = 0.0;
    double nu = 0.0;
};

MixedPowerSolution mixed_power_solution(double c0, double x0, double s0, const ImpactModel& m,
                                        double mu_tilde, double horizon);

/// Left side of the TWAP-speed equation for the Gamma-subordinated model:
/// gamma a0 x^2 + a1 {2 (1 - 1/(1 + a0 b1 x^2)) - log(a0 b1 x^2 + 1)}.
double levy_speed_equation(double gamma, double alpha0, double alpha1, double beta1, double x);

/// Root of levy_speed_equation = mu_tilde; requires alpha1 beta1 <= 8 gamma.
double levy_nu_hat(double gamma, double alpha0, double alpha1, double beta1, double mu_tilde);

struct ExtremeComparison {
    double c_hat = 0.0;    // proceeds of TWAP at nu_h
    double c_tilde = 0.0;  // proceeds of selling at x0_bar
    double nu = 0.0;
    double marginal = 0.0;
};

ExtremeComparison extreme_comparison(const ImpactModel& m, double x0, double s0, double mu_tilde,
                                     double horizon);

struct QuasiBlockValues {
    double value_limit = 0.0;
    double value_at_delta = 0.0;
};

/// Linear impact g(x) = alpha x: value of selling x0 at rate x0/delta on
/// [0, delta] and its delta -> 0 limit.
QuasiBlockValues linear_quasi_block(double alpha, double mu_tilde, double c0, double x0,
                                    double s0, double delta);

/// Deterministic proceeds per unit initial price of a schedule:
/// integral_0^T exp(-mu_tilde r - integral_0^r g(x_v) dv) x_r dr.
double schedule_objective(const Schedule& schedule, const ImpactModel& m, double mu_tilde);

}  // namespace optexec
