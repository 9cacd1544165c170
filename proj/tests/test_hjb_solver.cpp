#include "doctest.h"

#include <cmath>
#include <random>

#include "optexec/closed_form.hpp"
#include "optexec/errors.hpp"
#include "optexec/hjb_solver.hpp"

using namespace optexec;

namespace {

const double kTwapBenchmark = 100.0 * (1.0 - std::exp(-0.04)) / 0.4;

HjbOptions grid(std::size_t n) {
    HjbOptions o;
    o.nt = n;
    o.nx = n;
    return o;
}

void check_surface_invariants(const ValueSurface& s, const ImpactModel& m) {
    for (std::size_t i = 0; i <= s.nx(); ++i) CHECK(s.w(0, i) == 0.0);
    for (std::size_t n = 0; n <= s.nt(); ++n) CHECK(s.w(n, 0) == 0.0);
    bool bounded = true, mono_t = true, mono_x = true, range = true;
    for (std::size_t n = 0; n <= s.nt(); ++n) {
        for (std::size_t i = 0; i <= s.nx(); ++i) {
            const double w = s.w(n, i);
            bounded = bounded && w >= 0.0 && w <= s.x_at(i);
            if (n > 0) mono_t = mono_t && w >= s.w(n - 1, i);
            if (i > 0) mono_x = mono_x && w >= s.w(n, i - 1);
            const double y = s.policy(n, i);
            range = range && (y == 0.0 || y > m.threshold());
        }
    }
    CHECK(bounded);
    CHECK(mono_t);
    CHECK(mono_x);
    CHECK(range);
}

}  // namespace

TEST_CASE("Quadratic benchmark against the TWAP closed form") {
    const auto m = ImpactModel::quadratic(1.0);
    const auto s = solve_reduced_hjb(m, 0.04, 1.0, 0.2, grid(200));
    const double value = full_value_from_reduced(0.0, 100.0, s, 1.0, 0.1);
    CHECK(std::abs(value - kTwapBenchmark) / kTwapBenchmark <= 1e-2);
    CHECK(full_value_from_reduced(5.0, 0.0, s, 1.0, 0.1) == 5.0);
    CHECK(full_value_from_reduced(5.0, 100.0, s, 0.7, 0.0) == 5.0);
    CHECK_THROWS_AS(s.interpolate(1.1, 0.1), InvalidArgument);
    CHECK_THROWS_AS(s.interpolate(0.5, 0.3), InvalidArgument);
    check_surface_invariants(s, m);
}

TEST_CASE("policy is close to nu_h in the selling region") {
    const auto m = ImpactModel::quadratic(1.0);
    const auto s = solve_reduced_hjb(m, 0.04, 1.0, 0.2, grid(200));
    // Nodes with x well inside nu_h t and away from the front.
    int checked = 0;
    for (std::size_t n = 0; n <= s.nt(); ++n) {
        const double t = s.t_at(n);
        for (std::size_t i = 1; i <= s.nx(); ++i) {
            const double x = s.x_at(i);
            if (t < 0.5 || x < 0.02 || x > 0.5 * 0.2 * t) continue;
            CHECK(std::abs(s.policy(n, i) - 0.2) <= 0.05 * 0.2);
            ++checked;
        }
    }
    CHECK(checked > 100);
    for (std::size_t n = 0; n <= s.nt(); ++n) CHECK(s.policy(n, 0) == 0.0);
}

TEST_CASE("mixed power large inventory against the incomplete Beta value") {
    for (double xb : {0.0, 1.0}) {
        const auto m = ImpactModel::mixed_power(1.0, 2.0, 0.5, xb);
        const double x0 = xb > 0 ? 3.0 : 2.0;
        const auto sol = mixed_power_solution(0.0, x0, 1.0, m, 0.05, 1.0);
        REQUIRE(sol.regime == MixedPowerRegime::LargeInventory);
        const auto s = solve_reduced_hjb(m, 0.05, 1.0, 2 * x0, grid(200));
        CHECK(std::abs(s.interpolate(1.0, x0) - *sol.value) / *sol.value <= 1e-2);
        check_surface_invariants(s, m);
    }
}

TEST_CASE("surface invariants across families") {
    const std::vector<ImpactModel> models{ImpactModel::shifted_convex(1.0, 3.0),
                                          ImpactModel::levy_effective(1.0, 1.0, 1.0, 1.0),
                                          ImpactModel::mixed_power(0.7, 3.0, 0.3, 0.4)};
    for (const auto& m : models) {
        const auto s = solve_reduced_hjb(m, 0.05, 1.0, 1.0, grid(80));
        check_surface_invariants(s, m);
    }
}

TEST_CASE("grid refinement contracts the error") {
    const auto m = ImpactModel::quadratic(1.0);
    double prev = 0.0, prev_diff = 0.0;
    for (std::size_t n : {50, 100, 200}) {
        const double w = solve_reduced_hjb(m, 0.04, 1.0, 0.2, n, n, 32.0).interpolate(1.0, 0.1);
        if (n > 50) {
            const double diff = std::abs(w - prev);
            if (n > 100) CHECK(prev_diff / diff >= 1.5);
            prev_diff = diff;
        }
        prev = w;
    }
}

TEST_CASE("residual decreases at first order away from t = 0") {
    const auto m = ImpactModel::quadratic(1.0);
    HjbOptions o;
    o.residual_t_min = 0.1;
    std::vector<double> res;
    for (std::size_t n : {50, 100, 200}) {
        const auto s = solve_reduced_hjb(m, 0.04, 1.0, 0.2, n, n, 32.0);
        res.push_back(hjb_residual(s, m, 0.04, o));
    }
    const double order1 = std::log2(res[0] / res[1]);
    const double order2 = std::log2(res[1] / res[2]);
    CHECK(order1 >= 0.8);
    CHECK(order2 >= 0.8);

    // An unsolved surface has residual sup_y y(1 - 0) = y_max at x > 0.
    ValueSurface zero(1.0, 0.2, 10, 10);
    zero.y_max = 3.0;
    CHECK(hjb_residual(zero, m, 0.04) == doctest::Approx(3.0));
}

TEST_CASE("upwind update is monotone in its neighbours") {
    const std::vector<ImpactModel> models{ImpactModel::quadratic(1.0),
                                          ImpactModel::mixed_power(1.0, 2.0, 0.5, 1.0),
                                          ImpactModel::shifted_convex(1.0, 3.0)};
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& m : models) {
        const double y_max = 6.0, dx = 0.01, mu = 0.05;
        const double dt = 1.0 / (y_max / dx + mu + m.g(y_max));
        for (int k = 0; k < 500; ++k) {
            const double left = u(rng);
            const double w = left + dx * u(rng);
            const double bump = 1e-4 * u(rng);
            const double base = upwind_update(w, left, dx, dt, m, mu, y_max);
            CHECK(upwind_update(w + bump, left, dx, dt, m, mu, y_max) >= base - 1e-12);
            CHECK(upwind_update(w, left + bump, dx, dt, m, mu, y_max) >= base - 1e-12);
        }
    }
}

TEST_CASE("solver argument checks") {
    const auto q = ImpactModel::quadratic(1.0);
    CHECK_THROWS_AS(solve_reduced_hjb(q, 0.04, 1.0, 0.2, 1, 10, 1.0), InvalidArgument);
    CHECK_THROWS_AS(solve_reduced_hjb(q, 0.04, 0.0, 0.2, 10, 10, 1.0), InvalidArgument);
    const auto mp = ImpactModel::mixed_power(1.0, 2.0, 0.5, 1.0);
    CHECK_THROWS_AS(solve_reduced_hjb(mp, 0.04, 1.0, 0.2, 10, 10, 0.9), InvalidArgument);
    CHECK_THROWS_AS(solve_reduced_hjb(ImpactModel::linear(1.0), 0.04, 1.0, 0.2, 10, 10, 1.0),
                    A4Violation);
    CHECK(default_y_max(q, 0.04, 1.0, 0.2) == doctest::Approx(1.0));
}

TEST_CASE("y_max doubling removes saturation") {
    const auto q = ImpactModel::quadratic(1.0);
    HjbOptions o = grid(60);
    o.y_max = 0.5;
    const auto s = solve_reduced_hjb(q, 0.04, 1.0, 0.2, o);
    CHECK(s.y_max_doublings > 0);
    CHECK(s.y_max == doctest::Approx(0.5 * std::pow(2.0, s.y_max_doublings)));
    CHECK((s.saturation_fraction <= o.saturation_tol || s.y_max_doublings == o.max_doublings));
}

TEST_CASE("deterministic schedule oracle") {
    const auto q = ImpactModel::quadratic(1.0);
    const auto none = optimize_deterministic_schedule(q, 0.04, 1.0, 0.0, 4);
    CHECK(none.value == 0.0);
    CHECK(none.schedule.total() == 0.0);
    CHECK_THROWS_AS(optimize_deterministic_schedule(q, 0.04, 1.0, 0.1, 0), InvalidArgument);

    const auto best = optimize_deterministic_schedule(q, 0.04, 1.0, 0.1, 8);
    const double twap = kTwapBenchmark / 100.0;
    CHECK(best.value >= twap * (1 - 1e-3));
    CHECK(best.schedule.total() <= 0.1 + 1e-12);
    // Best found schedule sells near nu_h first.
    CHECK(std::abs(best.schedule.rate(0.0) - 0.2) <= 0.02);
    CHECK(best.schedule.rate(0.9) <= 1e-3);

    const auto s = solve_reduced_hjb(q, 0.04, 1.0, 0.2, grid(200));
    CHECK(best.value <= s.interpolate(1.0, 0.1) + 1e-3 * twap);
}
