#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "optexec/errors.hpp"
#include "optexec/impact_model.hpp"

using namespace optexec;

namespace {

std::vector<ImpactModel> zoo() {
    return {ImpactModel::mixed_power(1.0, 2.0, 0.5, 1.0), ImpactModel::mixed_power(0.7, 3.0, 0.3, 0.4),
            ImpactModel::mixed_power(1.0, 2.0, 0.5, 0.0), ImpactModel::shifted_convex(1.0, 3.0),
            ImpactModel::shifted_convex(0.5, 2.0),        ImpactModel::quadratic(1.0),
            ImpactModel::quadratic(2.5),                  ImpactModel::levy_effective(1.0, 1.0, 1.0, 1.0),
            ImpactModel::levy_effective(0.5, 2.0, 1.5, 2.0)};
}

}  // namespace

TEST_CASE("mixed power matching constants") {
    const auto m = ImpactModel::mixed_power(1.0, 2.0, 0.5, 1.0);
    const auto& p = std::get<MixedPowerParams>(m.params());
    CHECK(p.beta == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(p.gamma == doctest::Approx(3.0).epsilon(1e-15));

    const auto pure = ImpactModel::mixed_power(1.0, 2.0, 0.5, 0.0);
    const auto& q = std::get<MixedPowerParams>(pure.params());
    CHECK(q.beta == 0.0);
    CHECK(q.gamma == 0.0);
    CHECK(pure.g(1.7) == doctest::Approx(1.7 * 1.7));
}

TEST_CASE("mixed power is C1 at the threshold") {
    for (double xb : {0.3, 1.0, 2.5}) {
        const auto m = ImpactModel::mixed_power(1.0, 2.0, 0.5, xb);
        const double e = 1e-9 * xb;
        CHECK(std::abs(m.g(xb + e) - m.g(xb - e) - 2 * e * m.h(xb)) < 1e-14);
        CHECK(std::abs(m.h(xb - e) - m.h(xb + e)) < 1e-7);
        CHECK(std::abs(m.g(xb) - (m.g(xb - e) + m.g(xb + e)) / 2) < 1e-10);
    }
}

TEST_CASE("constructors reject parameters out of range") {
    CHECK_THROWS_AS(ImpactModel::mixed_power(1.0, 1.0, 0.5, 1.0), InvalidArgument);
    CHECK_THROWS_AS(ImpactModel::mixed_power(1.0, 2.0, 1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(ImpactModel::mixed_power(1.0, 2.0, 0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(ImpactModel::mixed_power(0.0, 2.0, 0.5, 1.0), InvalidArgument);
    CHECK_THROWS_AS(ImpactModel::mixed_power(1.0, 2.0, 0.5, -1.0), InvalidArgument);
    CHECK_THROWS_AS(ImpactModel::quadratic(0.0), InvalidArgument);
    CHECK_THROWS_AS(ImpactModel::linear(-1.0), InvalidArgument);
    CHECK_THROWS_AS(ImpactModel::shifted_convex(0.0, 3.0), InvalidArgument);
    CHECK_THROWS_AS(ImpactModel::shifted_convex(1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(ImpactModel::levy_effective(1.0, 1.0, 3.0, 3.0), InvalidArgument);
}

TEST_CASE("g examples") {
    CHECK(ImpactModel::quadratic(1.0).g(0.0) == 0.0);
    CHECK(ImpactModel::mixed_power(1.0, 2.0, 0.5, 1.0).g(2.0) == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(ImpactModel::shifted_convex(1.0, 3.0).g(0.5) == 0.0);
    CHECK(ImpactModel::shifted_convex(1.0, 3.0).g(1.5) == doctest::Approx(0.125));
    CHECK_THROWS_AS(ImpactModel::quadratic(1.0).g(-0.1), InvalidArgument);
}

TEST_CASE("h examples") {
    CHECK(ImpactModel::quadratic(1.0).h(3.0) == doctest::Approx(6.0));
    CHECK(ImpactModel::mixed_power(1.0, 2.0, 0.5, 1.0).h(0.25) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(ImpactModel::shifted_convex(1.0, 3.0).h(0.7) == 0.0);
    CHECK(ImpactModel::shifted_convex(1.0, 3.0).h(1.0) == 0.0);
    const auto levy = ImpactModel::levy_effective(1.0, 1.0, 1.0, 1.0);
    CHECK(levy.h(1e-9) < 1e-8);
    CHECK_THROWS_AS(levy.h(0.0), InvalidArgument);
}

TEST_CASE("h matches centered differences of g") {
    for (const auto& m : zoo()) {
        const double xb = m.threshold();
        const double lo = xb > 0 ? xb / 2 : 1e-3;
        const double hi = 10 * xb + 10;
        for (int k = 0; k <= 200; ++k) {
            const double x = lo + (hi - lo) * k / 200.0;
            if (std::abs(x - xb) < 1e-3) continue;
            const double e = 1e-6 * std::max(1.0, x);
            const double fd = (m.g(x + e) - m.g(x - e)) / (2 * e);
            const double h = m.h(x);
            CHECK(std::abs(fd - h) <= 1e-6 * std::max(1.0, std::abs(h)));
        }
    }
}

TEST_CASE("h inverse") {
    CHECK(ImpactModel::quadratic(1.0).h_inverse(4.0) == doctest::Approx(2.0));
    const auto mp = ImpactModel::mixed_power(1.0, 2.0, 0.5, 1.0);
    CHECK(mp.h_inverse(mp.h_at_threshold()) == 1.0);
    CHECK_THROWS_AS(mp.h_inverse(mp.h_at_threshold() - 0.1), InvalidArgument);
    CHECK_THROWS_AS(ImpactModel::linear(2.0).h_inverse(3.0), A4Violation);

    const auto levy = ImpactModel::levy_effective(1.0, 1.0, 1.0, 1.0);
    const double x = levy.h_inverse(5.0);
    CHECK(std::abs(levy.h(x) - 5.0) <= 1e-12 * 6.0);
}

TEST_CASE("h inverse composed with h is the identity on the convex branch") {
    for (const auto& m : zoo()) {
        const double xb = m.threshold();
        for (int k = 0; k <= 300; ++k) {
            const double x = xb + 1e-6 + (1e3 - xb) * std::pow(k / 300.0, 3.0);
            const double back = m.h_inverse(m.h(x));
            CHECK(std::abs(back - x) <= 1e-10 * std::max(1.0, x));
        }
    }
}

TEST_CASE("big G examples and properties") {
    CHECK(ImpactModel::quadratic(1.0).big_g(0.5) == doctest::Approx(0.25));
    CHECK(ImpactModel::shifted_convex(1.0, 3.0).big_g(1.0) == 0.0);
    CHECK(ImpactModel::linear(2.0).big_g(3.7) == 0.0);
    CHECK_THROWS_AS(ImpactModel::quadratic(1.0).big_g(0.0), InvalidArgument);

    std::mt19937_64 rng(3);
    for (const auto& m : zoo()) {
        const double xb = m.threshold();
        if (xb > 0) CHECK(m.big_g(xb) <= 1e-12);
        std::uniform_real_distribution<double> u(xb, xb + 20.0);
        for (int k = 0; k < 500; ++k) {
            double a = u(rng), b = u(rng);
            if (a == b || std::min(a, b) <= xb) continue;
            if (a < b) std::swap(a, b);
            const double lhs = m.big_g(a) - m.big_g(b);
            const double rhs = (m.h(a) - m.h(b)) * b;
            CHECK(lhs > 0.0);
            CHECK(lhs >= rhs - 1e-9 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST_CASE("Levy effective impact is convex") {
    const auto m = ImpactModel::levy_effective(1.0, 1.0, 1.0, 1.0);
    const double e = 1e-3;
    for (int k = 0; k <= 5000; ++k) {
        const double x = e + 10.0 * k / 5000.0;
        CHECK(m.g(x + e) - 2 * m.g(x) + m.g(x - e) >= -1e-9);
    }
}

TEST_CASE("S-shape validation") {
    CHECK(validate_s_shape(ImpactModel::quadratic(1.0)).all_pass());
    const auto lin = validate_s_shape(ImpactModel::linear(2.0));
    CHECK_FALSE(lin.a4.pass);
    CHECK(lin.a1.pass);
    const auto mp = validate_s_shape(ImpactModel::mixed_power(1.0, 2.0, 0.5, 1.0));
    CHECK(mp.all_pass());
    for (const auto& m : zoo()) CHECK(validate_s_shape(m).all_pass());

    std::vector<double> dyadic;
    for (int k = -20; k <= 10; ++k) dyadic.push_back(std::ldexp(1.0, k));
    CHECK(validate_s_shape(ImpactModel::quadratic(1.0), dyadic).all_pass());
}

TEST_CASE("config round trip") {
    for (const auto& m : zoo()) {
        const auto back = ImpactModel::from_config(m.to_config());
        CHECK(back.family() == m.family());
        for (double x : {0.1, 0.9, 1.3, 7.0}) CHECK(back.g(x) == m.g(x));
    }
    CHECK_THROWS_AS(ImpactModel::from_config({{"family", "cubic"}}), InvalidArgument);
    CHECK_THROWS_AS(ImpactModel::from_config({{"family", "quadratic"}}), InvalidArgument);
    CHECK(parse_family("levy_effective") == ImpactFamily::LevyEffective);
    CHECK_THROWS_AS(ImpactModel::from_config({{"family", "quadratic"}, {"alpha0", "1"}, {"alpha", "2"}}),
                    InvalidArgument);
}
