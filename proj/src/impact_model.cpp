#include "optexec/impact_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "optexec/errors.hpp"
#include "optexec/numerics.hpp"

namespace optexec {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const char* message) {
    if (!ok) throw InvalidArgument(message);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double get_number(const std::map<std::string, std::string>& section, const std::string& key) {
    const auto it = section.find(key);
    if (it == section.end()) {
        throw InvalidArgument("impact section is missing key '" + key + "'");
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(it->second, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != it->second.size()) {
        throw InvalidArgument("impact key '" + key + "' is not a number: " + it->second);
    }
    return value;
}

}  // namespace

std::string_view to_string(ImpactFamily family) {
    switch (family) {
        case ImpactFamily::MixedPower: return "mixed_power";
        case ImpactFamily::ShiftedConvex: return "shifted_convex";
        case ImpactFamily::Quadratic: return "quadratic";
        case ImpactFamily::Linear: return "linear";
        case ImpactFamily::LevyEffective: return "levy_effective";
    }
    return "unknown";
}

ImpactFamily parse_family(std::string_view name) {
    for (auto f : {ImpactFamily::MixedPower, ImpactFamily::ShiftedConvex, ImpactFamily::Quadratic,
                   ImpactFamily::Linear, ImpactFamily::LevyEffective}) {
        if (to_string(f) == name) return f;
    }
    throw InvalidArgument("unknown impact family: " + std::string(name));
}

ImpactModel ImpactModel::mixed_power(double alpha, double pi, double pi_tilde, double x0_bar) {
    require(alpha > 0.0 && std::isfinite(alpha), "mixed_power: alpha must be positive");
    require(pi > 1.0 && std::isfinite(pi), "mixed_power: pi must exceed 1");
    require(pi_tilde > 0.0 && pi_tilde < 1.0, "mixed_power: pi_tilde must lie in (0, 1)");
    require(x0_bar >= 0.0 && std::isfinite(x0_bar), "mixed_power: x0_bar must be non-negative");
    MixedPowerParams p{alpha, pi, pi_tilde, x0_bar, 0.0, 0.0};
    if (x0_bar > 0.0) {
        p.beta = (pi / pi_tilde) * alpha * std::pow(x0_bar, pi - pi_tilde);
        p.gamma = (pi / pi_tilde - 1.0) * alpha * std::pow(x0_bar, pi);
    }
    return ImpactModel(p);
}

ImpactModel ImpactModel::shifted_convex(double x0_bar, double q) {
    require(x0_bar > 0.0 && std::isfinite(x0_bar), "shifted_convex: x0_bar must be positive");
    require(q > 1.0 && std::isfinite(q), "shifted_convex: exponent q must exceed 1");
    return ImpactModel(ShiftedConvexParams{x0_bar, q});
}

ImpactModel ImpactModel::quadratic(double alpha0) {
    require(alpha0 > 0.0 && std::isfinite(alpha0), "quadratic: alpha0 must be positive");
    return ImpactModel(QuadraticParams{alpha0});
}

ImpactModel ImpactModel::linear(double alpha) {
    require(alpha > 0.0 && std::isfinite(alpha), "linear: alpha must be positive");
    return ImpactModel(LinearParams{alpha});
}

ImpactModel ImpactModel::levy_effective(double gamma, double alpha0, double alpha1, double beta1) {
    require(gamma > 0.0 && alpha0 > 0.0 && alpha1 > 0.0 && beta1 > 0.0,
            "levy_effective: gamma, alpha0, alpha1, beta1 must be positive");
    require(alpha1 * beta1 <= 8.0 * gamma, "levy_effective: requires alpha1 * beta1 <= 8 gamma");
    return ImpactModel(LevyEffectiveParams{gamma, alpha0, alpha1, beta1});
}

ImpactFamily ImpactModel::family() const noexcept {
    return std::visit(Overloaded{
                          [](const MixedPowerParams&) { return ImpactFamily::MixedPower; },
                          [](const ShiftedConvexParams&) { return ImpactFamily::ShiftedConvex; },
                          [](const QuadraticParams&) { return ImpactFamily::Quadratic; },
                          [](const LinearParams&) { return ImpactFamily::Linear; },
                          [](const LevyEffectiveParams&) { return ImpactFamily::LevyEffective; },
                      },
                      params_);
}

double ImpactModel::threshold() const noexcept {
    return std::visit(Overloaded{
                          [](const MixedPowerParams& p) { return p.x0_bar; },
                          [](const ShiftedConvexParams& p) { return p.x0_bar; },
                          [](const auto&) { return 0.0; },
                      },
                      params_);
}

double ImpactModel::g(double x) const {
    if (!(x >= 0.0)) throw InvalidArgument("g: x must be non-negative");
    return std::visit(
        Overloaded{
            [x](const MixedPowerParams& p) {
                if (x <= p.x0_bar) return p.beta * std::pow(x, p.pi_tilde);
                return p.alpha * std::pow(x, p.pi) + p.gamma;
            },
            [x](const ShiftedConvexParams& p) {
                return x <= p.x0_bar ? 0.0 : std::pow(x - p.x0_bar, p.q);
            },
            [x](const QuadraticParams& p) { return p.alpha0 * x * x; },
            [x](const LinearParams& p) { return p.alpha * x; },
            [x](const LevyEffectiveParams& p) {
                return p.gamma * p.alpha0 * x * x + p.alpha1 * std::log1p(p.alpha0 * p.beta1 * x * x);
            },
        },
        params_);
}

double ImpactModel::h(double x) const {
    if (!(x > 0.0)) throw InvalidArgument("h: x must be positive");
    return h_unchecked(x);
}

double ImpactModel::h_unchecked(double x) const {
    return std::visit(
        Overloaded{
            [x](const MixedPowerParams& p) {
                if (x <= p.x0_bar) return p.beta * p.pi_tilde * std::pow(x, p.pi_tilde - 1.0);
                return p.alpha * p.pi * std::pow(x, p.pi - 1.0);
            },
            [x](const ShiftedConvexParams& p) {
                return x <= p.x0_bar ? 0.0 : p.q * std::pow(x - p.x0_bar, p.q - 1.0);
            },
            [x](const QuadraticParams& p) { return 2.0 * p.alpha0 * x; },
            [](const LinearParams& p) { return p.alpha; },
            [x](const LevyEffectiveParams& p) {
                const double k = p.alpha0 * p.beta1;
                return 2.0 * p.gamma * p.alpha0 * x + 2.0 * p.alpha1 * k * x / (1.0 + k * x * x);
            },
        },
        params_);
}

double ImpactModel::h_at_threshold() const noexcept {
    return std::visit(Overloaded{
                          [](const MixedPowerParams& p) {
                              return p.alpha * p.pi * std::pow(p.x0_bar, p.pi - 1.0);
                          },
                          [](const LinearParams& p) { return p.alpha; },
                          [](const auto&) { return 0.0; },
                      },
                      params_);
}

double ImpactModel::h_inverse(double y) const {
    if (violates_a4()) {
        throw A4Violation("h_inverse: the linear family has constant marginal impact and no inverse");
    }
    const double y_min = h_at_threshold();
    if (!(y >= y_min) || !std::isfinite(y)) {
        throw InvalidArgument("h_inverse: argument is below h(x0_bar)");
    }
    const double x0 = threshold();
    if (y == y_min) return x0;
    return std::visit(
        Overloaded{
            [y, x0](const MixedPowerParams& p) {
                const double x = std::pow(y / (p.alpha * p.pi), 1.0 / (p.pi - 1.0));
                return std::max(x, x0);
            },
            [y](const ShiftedConvexParams& p) {
                return p.x0_bar + std::pow(y / p.q, 1.0 / (p.q - 1.0));
            },
            [y](const QuadraticParams& p) { return y / (2.0 * p.alpha0); },
            [](const LinearParams&) { return 0.0; },
            [this, y, x0](const LevyEffectiveParams&) {
                return numerics::solve_increasing([this](double x) { return h_unchecked(x); }, y,
                                                  x0);
            },
        },
        params_);
}

double ImpactModel::big_g(double x) const {
    if (!(x > 0.0)) throw InvalidArgument("big_g: x must be positive");
    return x * h_unchecked(x) - g(x);
}

std::map<std::string, std::string> ImpactModel::to_config() const {
    std::map<std::string, std::string> out;
    out["family"] = std::string(to_string(family()));
    std::visit(Overloaded{
                   [&](const MixedPowerParams& p) {
                       out["alpha"] = format_double(p.alpha);
                       out["pi"] = format_double(p.pi);
                       out["pi_tilde"] = format_double(p.pi_tilde);
                       out["x0_bar"] = format_double(p.x0_bar);
                   },
                   [&](const ShiftedConvexParams& p) {
                       out["x0_bar"] = format_double(p.x0_bar);
                       out["q"] = format_double(p.q);
                   },
                   [&](const QuadraticParams& p) { out["alpha0"] = format_double(p.alpha0); },
                   [&](const LinearParams& p) { out["alpha"] = format_double(p.alpha); },
                   [&](const LevyEffectiveParams& p) {
                       out["gamma"] = format_double(p.gamma);
                       out["alpha0"] = format_double(p.alpha0);
                       out["alpha1"] = format_double(p.alpha1);
                       out["beta1"] = format_double(p.beta1);
                   },
               },
               params_);
    return out;
}

ImpactModel ImpactModel::from_config(const std::map<std::string, std::string>& section) {
    const auto it = section.find("family");
    if (it == section.end()) throw InvalidArgument("impact section is missing key 'family'");
    const auto n = [&](const char* key) { return get_number(section, key); };
    const auto family = parse_family(it->second);
    static const std::map<ImpactFamily, std::vector<std::string>> known{
        {ImpactFamily::MixedPower, {"alpha", "pi", "pi_tilde", "x0_bar"}},
        {ImpactFamily::ShiftedConvex, {"x0_bar", "q"}},
        {ImpactFamily::Quadratic, {"alpha0"}},
        {ImpactFamily::Linear, {"alpha"}},
        {ImpactFamily::LevyEffective, {"gamma", "alpha0", "alpha1", "beta1"}},
    };
    const auto& keys = known.at(family);
    for (const auto& [key, value] : section) {
        if (key != "family" && std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw InvalidArgument("unknown key '" + key + "' for impact family " + it->second);
        }
    }
    switch (family) {
        case ImpactFamily::MixedPower:
            return mixed_power(n("alpha"), n("pi"), n("pi_tilde"), n("x0_bar"));
        case ImpactFamily::ShiftedConvex:
            return shifted_convex(n("x0_bar"), n("q"));
        case ImpactFamily::Quadratic:
            return quadratic(n("alpha0"));
        case ImpactFamily::Linear:
            return linear(n("alpha"));
        case ImpactFamily::LevyEffective:
            return levy_effective(n("gamma"), n("alpha0"), n("alpha1"), n("beta1"));
    }
    throw InvalidArgument("unhandled impact family");
}

std::vector<double> default_shape_grid() {
    constexpr int n = 512;
    std::vector<double> grid(n);
    const double lo = std::log(1e-6);
    const double hi = std::log(1e3);
    for (int i = 0; i < n; ++i) {
        grid[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / (n - 1));
    }
    return grid;
}

ShapeReport validate_s_shape(const ImpactModel& model) {
    const auto grid = default_shape_grid();
    return validate_s_shape(model, grid);
}

ShapeReport validate_s_shape(const ImpactModel& model, std::span<const double> grid) {
    ShapeReport report;
    report.a1.name = "A1";
    report.a2.name = "A2";
    report.a3.name = "A3";
    report.a4.name = "A4";

    const auto fail = [](ConditionCheck& c, double x, std::string detail) {
        if (!c.pass) return;
        c.pass = false;
        c.first_violation = x;
        c.detail = std::move(detail);
    };

    // A1: g(0) = 0, g non-negative and non-decreasing.
    if (model.g(0.0) != 0.0) fail(report.a1, 0.0, "g(0) != 0");
    double prev_g = 0.0;
    for (double x : grid) {
        const double gx = model.g(x);
        if (gx < 0.0) fail(report.a1, x, "g negative");
        if (gx < prev_g) fail(report.a1, x, "g decreasing");
        prev_g = gx;
    }

    // A2: x h(x) -> 0 as x -> 0, probed at x = 1e-8, 1e-16, ..., 1e-80.
    {
        double prev = INFINITY;
        double smallest = INFINITY;
        for (int k = 1; k <= 10; ++k) {
            const double x = std::pow(10.0, -8.0 * k);
            const double v = x * model.h(x);
            if (v > prev) fail(report.a2, x, "x h(x) increases as x -> 0");
            prev = v;
            smallest = std::min(smallest, v);
        }
        if (!(smallest < 1e-3)) fail(report.a2, 1e-80, "x h(x) does not approach 0");
    }

    // A3: strictly decreasing on (0, x0_bar], strictly increasing beyond.
    // The shifted-convex family is flat (h = 0) below x0_bar; that branch is
    // accepted as a degenerate, non-strict limit.
    {
        const double x0 = model.threshold();
        const bool flat_ok = model.family() == ImpactFamily::ShiftedConvex;
        std::vector<double> pts(grid.begin(), grid.end());
        if (x0 > 0.0) pts.push_back(x0);
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        for (std::size_t i = 1; i < pts.size(); ++i) {
            const double a = pts[i - 1];
            const double b = pts[i];
            const double ha = model.h(a);
            const double hb = model.h(b);
            if (b <= x0) {
                if (hb > ha || (hb == ha && !flat_ok)) fail(report.a3, b, "h not decreasing below x0_bar");
            } else if (a >= x0) {
                if (!(hb > ha)) fail(report.a3, b, "h not increasing above x0_bar");
            }
        }
        if (report.a3.pass) {
            report.a3.detail = x0 > 0.0 ? "h decreasing on (0, x0_bar], increasing beyond"
                                        : "x0_bar = 0 branch: h increasing";
        }
    }

    // A4: h grows without bound.
    if (model.violates_a4()) {
        fail(report.a4, grid.empty() ? 0.0 : grid.back(), "A4-violating family: h is bounded");
    } else if (grid.size() >= 2) {
        const double h_mid = model.h(grid[grid.size() / 2]);
        const double h_end = model.h(grid.back());
        if (!(h_end > h_mid)) fail(report.a4, grid.back(), "h not growing at the right end");
    }
    return report;
}

}  // namespace optexec
