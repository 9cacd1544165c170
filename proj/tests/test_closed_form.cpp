#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>

#include "optexec/closed_form.hpp"
#include "optexec/errors.hpp"

using namespace optexec;

namespace {

// Plain bisection on an increasing function; the test-side oracle.
double bisect(const std::function<double(double)>& f, double target, double lo, double hi) {
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Composite Simpson rule with n (even) panels.
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    const double w = (b - a) / n;
    double sum = f(a) + f(b);
    for (int k = 1; k < n; ++k) sum += (k % 2 ? 4.0 : 2.0) * f(a + k * w);
    return sum * w / 3.0;
}

// Composite three-point Gauss-Legendre; never evaluates the endpoints.
double gauss3(const std::function<double(double)>& f, double a, double b, int n) {
    const double r = std::sqrt(0.6);
    const double w = (b - a) / n;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        const double c = a + (k + 0.5) * w;
        sum += (5 * f(c - r * w / 2) + 8 * f(c) + 5 * f(c + r * w / 2)) / 18.0;
    }
    return sum * w;
}

}  // namespace

TEST_CASE("market parameters") {
    const auto m = MarketParams::from_mu_sigma(0.01, 0.2);
    CHECK(m.mu_tilde() + m.mu() + 0.5 * m.sigma() * m.sigma() == 0.0);
    const auto t = MarketParams::from_mu_tilde(0.04, 0.3);
    CHECK(t.mu() == doctest::Approx(-0.04 - 0.045));
    CHECK_THROWS_AS(MarketParams::from_mu_sigma(0.0, -0.1), InvalidArgument);
}

TEST_CASE("schedules") {
    const auto s = Schedule::constant_until(0.2, 0.5, 1.0);
    CHECK(s.rate(0.0) == 0.2);
    CHECK(s.rate(0.49) == 0.2);
    CHECK(s.rate(0.5) == 0.0);
    CHECK(s.rate(1.0) == 0.0);
    CHECK(s.total() == doctest::Approx(0.1));
    const auto p = Schedule::piecewise_constant({1.0, 0.0, 2.0, 0.5}, 2.0);
    CHECK(p.total() == doctest::Approx(1.75));
    CHECK(p.rate(1.2) == 2.0);
    CHECK(p.sample(4) == std::vector<double>{1.0, 0.0, 2.0, 0.5});
    CHECK_THROWS_AS(Schedule::piecewise_constant({1.0, -1.0}, 1.0), InvalidArgument);
    CHECK_THROWS_AS(Schedule::zero(0.0), InvalidArgument);
}

TEST_CASE("nu_h examples") {
    CHECK(std::abs(nu_h(ImpactModel::quadratic(1.0), 0.04) - 0.2) <= 1e-10);

    const auto mp = ImpactModel::mixed_power(1.0, 2.0, 0.5, 1.0);
    CHECK(std::abs(nu_h(mp, 0.05) - std::sqrt(3.05)) <= 1e-10);

    const auto sc = ImpactModel::shifted_convex(1.0, 3.0);
    const double oracle =
        bisect([](double v) { return (v - 1) * (v - 1) * (2 * v + 1); }, 0.05, 1.0, 3.0);
    CHECK(std::abs(nu_h(sc, 0.05) - oracle) <= 1e-12);
    CHECK(nu_h(sc, 0.05) == doctest::Approx(1.124).epsilon(1e-3));

    CHECK_THROWS_AS(nu_h(ImpactModel::linear(1.0), 0.05), A4Violation);
    CHECK_THROWS_AS(nu_h(ImpactModel::quadratic(1.0), 0.0), InvalidArgument);
}

TEST_CASE("nu_h residual and location on random sweeps") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 3.0), mt(1e-3, 2.0), pt(0.1, 0.9), pw(1.2, 4.0);
    for (int k = 0; k < 200; ++k) {
        const double mu = mt(rng);
        const std::vector<ImpactModel> models{
            ImpactModel::mixed_power(u(rng), pw(rng), pt(rng), u(rng)),
            ImpactModel::shifted_convex(u(rng), pw(rng)), ImpactModel::quadratic(u(rng)),
            ImpactModel::levy_effective(2.0, u(rng), 1.0, 1.0)};
        for (const auto& m : models) {
            const double nu = nu_h(m, mu);
            CHECK(nu > m.threshold());
            CHECK(std::abs(m.big_g(nu) - mu) <= 1e-12 * (1.0 + mu));
        }
    }
}

TEST_CASE("TWAP solution") {
    const auto q = ImpactModel::quadratic(1.0);
    const auto sol = twap_solution(0.0, 0.1, 100.0, q, 0.04, 1.0);
    const double expected = 100.0 * (1.0 - std::exp(-0.04)) / 0.4;
    CHECK(sol.value == doctest::Approx(expected).epsilon(1e-14));
    CHECK(sol.value == doctest::Approx(9.8027).epsilon(1e-5));
    CHECK(sol.nu == doctest::Approx(0.2));
    CHECK(sol.schedule.rate(0.3) == doctest::Approx(0.2));
    CHECK(sol.schedule.rate(0.6) == 0.0);
    CHECK(sol.schedule.total() == doctest::Approx(0.1));

    CHECK(twap_solution(3.0, 1e-12, 100.0, q, 0.04, 1.0).value == doctest::Approx(3.0));
    CHECK(twap_value(0.0, 1.0, 1.0, 2.0) == doctest::Approx((1 - std::exp(-2.0)) / 2.0));

    try {
        twap_solution(0.0, 0.5, 100.0, q, 0.04, 1.0);
        FAIL("expected a hypothesis violation");
    } catch (const HypothesisViolation& e) {
        CHECK(std::string(e.hint()).find("solve-hjb") != std::string::npos);
    }

    // Monotone in s0 and x0, decreasing in the marginal impact.
    CHECK(twap_value(0, 0.1, 101, 0.4) > twap_value(0, 0.1, 100, 0.4));
    CHECK(twap_value(0, 0.11, 100, 0.4) > twap_value(0, 0.1, 100, 0.4));
    CHECK(twap_value(0, 0.1, 100, 0.41) < twap_value(0, 0.1, 100, 0.4));

    // The value equals the deterministic objective of the schedule.
    CHECK(100.0 * schedule_objective(sol.schedule, q, 0.04) ==
          doctest::Approx(sol.value).epsilon(1e-12));
}

TEST_CASE("incomplete Beta") {
    CHECK(incomplete_beta(0.0, 1.5, 2.0) == 0.0);
    CHECK(incomplete_beta(0.37, 1.0, 1.0) == doctest::Approx(0.37).epsilon(1e-14));

    // x = u^2 turns the integrand x^(-1/2) (1-x)^(-1) into 2 / (1 - u^2).
    const double oracle = simpson([](double u) { return 2.0 / (1.0 - u * u); }, 0.0,
                                  std::sqrt(0.5), 20000);
    const double exact = 2.0 * std::atanh(std::sqrt(0.5));
    CHECK(std::abs(oracle - exact) <= 1e-12 * exact);
    CHECK(std::abs(incomplete_beta(0.5, 1.5, 2.0) - exact) <= 1e-10 * exact);

    // B(z; a, 1) = z^(2-a) / (2-a) for a < 2.
    for (double a : {0.3, 1.2, 1.5, 1.9}) {
        for (double z : {0.1, 0.5, 0.95}) {
            const double ref = std::pow(z, 2 - a) / (2 - a);
            CHECK(std::abs(incomplete_beta(z, a, 1.0) - ref) <= 1e-10 * ref);
        }
    }
    // B(z; 1, b) = (1 - (1-z)^(2-b)) / (2-b) for b != 2, -log(1-z) for b = 2.
    for (double z : {0.2, 0.9, 0.999}) {
        CHECK(std::abs(incomplete_beta(z, 1.0, 2.0) + std::log1p(-z)) <= 1e-10 * -std::log1p(-z));
        const double ref = (1 - std::pow(1 - z, 0.5)) / 0.5;
        CHECK(std::abs(incomplete_beta(z, 1.0, 1.5) - ref) <= 1e-10 * ref);
    }
    CHECK_THROWS_AS(incomplete_beta(-0.1, 1.5, 2.0), InvalidArgument);
    CHECK_THROWS_AS(incomplete_beta(1.0, 1.5, 2.0), InvalidArgument);
    CHECK(incomplete_beta(1.0, 1.5, 1.5) == doctest::Approx(std::tgamma(0.5) * std::tgamma(0.5)));
}

TEST_CASE("mixed power small inventory coincides with TWAP for a pure power") {
    const auto m = ImpactModel::mixed_power(1.0, 2.0, 0.5, 0.0);
    const double mu = 0.04;
    const auto sol = mixed_power_solution(0.0, 0.1, 100.0, m, mu, 1.0);
    CHECK(sol.nu == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(sol.delta == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(sol.delta == doctest::Approx(m.h(sol.nu)).epsilon(1e-14));
    REQUIRE(sol.regime == MixedPowerRegime::SmallInventory);
    const auto twap = twap_solution(0.0, 0.1, 100.0, m, mu, 1.0);
    CHECK(std::abs(*sol.value - twap.value) <= 1e-12 * twap.value);
}

TEST_CASE("mixed power delta equals h(nu) and nu exceeds the threshold") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.1, 3.0), pt(0.1, 0.9), pw(1.2, 4.0);
    for (int k = 0; k < 100; ++k) {
        const auto m = ImpactModel::mixed_power(u(rng), pw(rng), pt(rng), u(rng));
        const auto sol = mixed_power_solution(0.0, 1.0, 1.0, m, 0.05 * u(rng), 1.0);
        CHECK(sol.nu > m.threshold());
        CHECK(sol.delta == doctest::Approx(m.h(sol.nu)).epsilon(1e-12));
        CHECK(sol.x_star_2 <= sol.x_star_1);
    }
}

TEST_CASE("mixed power large inventory") {
    const auto m = ImpactModel::mixed_power(1.0, 2.0, 0.5, 1.0);
    const double mu = 0.05, T = 1.0;
    const auto sol = mixed_power_solution(0.0, 3.0, 1.0, m, mu, T);
    REQUIRE(sol.regime == MixedPowerRegime::LargeInventory);
    CHECK(sol.x_star_2 == doctest::Approx(std::sqrt(3.05)).epsilon(1e-14));

    // The schedule sells exactly x*1; integrate it after t = T - v^2.
    const auto& s = *sol.schedule;
    const double sold =
        gauss3([&](double v) { return 2.0 * v * s.rate(T - v * v); }, 0.0, std::sqrt(T), 2000);
    CHECK(std::abs(sold - sol.x_star_1) <= 1e-9 * sol.x_star_1);

    // Rate decreasing and above nu.
    double prev = s.rate(0.0);
    for (int k = 1; k < 1000; ++k) {
        const double r = s.rate(T * k / 1000.0);
        CHECK(r >= prev);
        CHECK(r >= sol.nu);
        prev = r;
    }
    // Value formula and its T -> infinity limit.
    const double rate = 2.0 * (mu + 3.0);
    CHECK(*sol.value == doctest::Approx(std::pow(1 - std::exp(-rate * T), 0.5) / sol.delta));
    const auto far = mixed_power_solution(0.0, 1e9, 1.0, m, mu, 50.0);
    CHECK(*far.value == doctest::Approx(1.0 / far.delta).epsilon(1e-12));

    // Value equals the deterministic objective of the schedule.
    CHECK(schedule_objective(s, m, mu) == doctest::Approx(*sol.value).epsilon(1e-6));
}

TEST_CASE("mixed power regime gap is reported as unsolved") {
    const auto m = ImpactModel::mixed_power(1.0, 2.0, 0.5, 1.0);
    const auto sol = mixed_power_solution(0.0, 2.0, 1.0, m, 0.05, 1.0);
    CHECK(sol.regime == MixedPowerRegime::Unsolved);
    CHECK_FALSE(sol.value.has_value());
    CHECK_FALSE(sol.schedule.has_value());
    CHECK(sol.x_star_2 < 2.0);
    CHECK(sol.x_star_1 > 2.0);
    CHECK_THROWS_AS(mixed_power_solution(0.0, 1.0, 1.0, ImpactModel::quadratic(1.0), 0.05, 1.0),
                    InvalidArgument);
}

TEST_CASE("Levy nu hat") {
    const auto eq = [](double x) {
        return x * x + (2.0 * (1.0 - 1.0 / (1.0 + x * x)) - std::log1p(x * x));
    };
    const double oracle = bisect(eq, 0.1, 0.0, 1.0);
    const double nu = levy_nu_hat(1.0, 1.0, 1.0, 1.0, 0.1);
    CHECK(std::abs(nu - oracle) <= 1e-12);
    CHECK(nu == doctest::Approx(0.2278).epsilon(1e-3));
    CHECK(std::abs(levy_speed_equation(1, 1, 1, 1, nu) - 0.1) <= 1e-12 * 1.1);
    CHECK(std::abs(ImpactModel::levy_effective(1, 1, 1, 1).big_g(nu) - 0.1) <= 1e-10);
    CHECK(levy_nu_hat(1.0, 1.0, 1.0, 1.0, 1e-8) < 1e-3);
    CHECK_THROWS_AS(levy_nu_hat(1.0, 1.0, 3.0, 3.0, 0.1), InvalidArgument);
    CHECK_THROWS_AS(levy_nu_hat(1.0, 1.0, 1.0, 1.0, 0.0), InvalidArgument);
}

TEST_CASE("extreme impact comparison") {
    CHECK(iota(1e-300, 2.0) == doctest::Approx(2.0));
    CHECK(iota(0.0, 2.0) == 2.0);
    CHECK(iota(1.0, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)));

    const auto m = ImpactModel::shifted_convex(1.0, 3.0);
    const auto c = extreme_comparison(m, 0.5, 100.0, 0.05, 1.0);
    const double nu =
        bisect([](double v) { return (v - 1) * (v - 1) * (2 * v + 1); }, 0.05, 1.0, 3.0);
    const double h = 3 * (nu - 1) * (nu - 1);
    CHECK(c.marginal == doctest::Approx(h).epsilon(1e-12));
    CHECK(h < 0.05);
    CHECK(c.c_hat == doctest::Approx(100 * (1 - std::exp(-0.5 * h)) / h).epsilon(1e-12));
    CHECK(c.c_tilde == doctest::Approx(100 * (1 - std::exp(-0.025)) / 0.05).epsilon(1e-12));
    CHECK(c.c_hat > c.c_tilde);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.2, 3.0), q(1.5, 4.0);
    for (int k = 0; k < 100; ++k) {
        const auto sc = ImpactModel::shifted_convex(u(rng), q(rng));
        const double mu = 0.05 * u(rng);
        const double x0 = 0.1 * u(rng);
        const auto r = extreme_comparison(sc, x0, 10.0, mu, 10.0);
        CHECK(r.c_hat > r.c_tilde);
    }
    CHECK_THROWS_AS(extreme_comparison(ImpactModel::quadratic(1.0), 0.5, 1.0, 0.05, 1.0),
                    InvalidArgument);
}

TEST_CASE("linear quasi-block limit") {
    const auto limit = linear_quasi_block(1.0, 0.05, 0.0, 1.0, 1.0, 0.1).value_limit;
    CHECK(limit == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
    double prev = -1.0;
    for (double delta : {0.1, 0.01, 0.001}) {
        const auto v = linear_quasi_block(1.0, 0.05, 0.0, 1.0, 1.0, delta);
        const double k = 0.05 + 1.0 / delta;
        const double oracle = (1.0 / delta) * (1.0 - std::exp(-k * delta)) / k;
        CHECK(v.value_at_delta == doctest::Approx(oracle).epsilon(1e-10));
        CHECK(v.value_at_delta > prev);
        CHECK(v.value_at_delta < v.value_limit);
        prev = v.value_at_delta;
    }
    CHECK(linear_quasi_block(1.0, 0.05, 2.0, 1e-12, 1.0, 0.1).value_limit ==
          doctest::Approx(2.0));
    CHECK_THROWS_AS(linear_quasi_block(0.0, 0.05, 0.0, 1.0, 1.0, 0.1), InvalidArgument);
}

TEST_CASE("schedule objective on a closed-form rate function") {
    const auto q = ImpactModel::quadratic(1.0);
    const auto fn = Schedule::from_function([](double t) { return t < 0.5 ? 0.2 : 0.0; }, 1.0, 0.1);
    const auto pc = Schedule::constant_until(0.2, 0.5, 1.0);
    CHECK(schedule_objective(fn, q, 0.04) ==
          doctest::Approx(schedule_objective(pc, q, 0.04)).epsilon(1e-9));
}
