#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace optexec {

enum class ImpactFamily { MixedPower, ShiftedConvex, Quadratic, Linear, LevyEffective };

std::string_view to_string(ImpactFamily family);
ImpactFamily parse_family(std::string_view name);

/// g(x) = beta x^pi_tilde on [0, x0_bar], alpha x^pi + gamma beyond, with
/// beta and gamma fixed by C^1 matching at x0_bar.
struct MixedPowerParams {
    double alpha = 1.0;
    double pi = 2.0;
    double pi_tilde = 0.5;
    double x0_bar = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

/// g(x) = (x - x0_bar)^q for x >= x0_bar and zero below.
struct ShiftedConvexParams {
    double x0_bar = 1.0;
    double q = 3.0;
};

struct QuadraticParams {
    double alpha0 = 1.0;
};

/// g(x) = alpha x. Violates the growth condition; kept for limit analysis.
struct LinearParams {
    double alpha = 1.0;
};

/// g(x) = gamma alpha0 x^2 + alpha1 log(alpha0 beta1 x^2 + 1), the effective
/// deterministic impact of a Gamma-subordinated quadratic impact.
struct LevyEffectiveParams {
    double gamma = 1.0;
    double alpha0 = 1.0;
    double alpha1 = 1.0;
    double beta1 = 1.0;
};

using ImpactParams = std::variant<MixedPowerParams, ShiftedConvexParams, QuadraticParams,
                                  LinearParams, LevyEffectiveParams>;

/// An S-shaped market-impact function g with marginal h = g'.
///
/// h is decreasing on (0, x0_bar] and increasing on [x0_bar, infinity), so it
/// has an inverse on its increasing branch. Instances are immutable.
class ImpactModel {
public:
    static ImpactModel mixed_power(double alpha, double pi, double pi_tilde, double x0_bar);
    static ImpactModel shifted_convex(double x0_bar, double q);
    static ImpactModel quadratic(double alpha0);
    static ImpactModel linear(double alpha);
    static ImpactModel levy_effective(double gamma, double alpha0, double alpha1, double beta1);

    ImpactFamily family() const noexcept;
    const ImpactParams& params() const noexcept { return params_; }

    /// Concave/convex threshold x0_bar.
    double threshold() const noexcept;

    /// True for the Linear family, whose marginal stays bounded.
    bool violates_a4() const noexcept { return family() == ImpactFamily::Linear; }

    /// Impact rate g(x), x >= 0.
    double g(double x) const;

    /// Marginal impact h(x) = g'(x), x > 0.
    double h(double x) const;

    /// h at the threshold; for x0_bar = 0 this is the right limit h(0+).
    double h_at_threshold() const noexcept;

    /// Inverse of h on [h(x0_bar), infinity) -> [x0_bar, infinity).
    double h_inverse(double y) const;

    /// G_h(x) = x h(x) - g(x), x > 0.
    double big_g(double x) const;

    /// Flat key/value representation, the body of an [impact] section.
    std::map<std::string, std::string> to_config() const;
    static ImpactModel from_config(const std::map<std::string, std::string>& section);

private:
    explicit ImpactModel(ImpactParams params) : params_(std::move(params)) {}

    double h_unchecked(double x) const;

    ImpactParams params_;
};

/// Outcome of one numeric check of the S-shape conditions.
struct ConditionCheck {
    std::string name;
    bool pass = true;
    std::optional<double> first_violation;
    std::string detail;
};

/// Numeric audit of the four conditions on g and h.
struct ShapeReport {
    ConditionCheck a1;  // g(0) = 0, g >= 0, non-decreasing
    ConditionCheck a2;  // x h(x) -> 0 as x -> 0
    ConditionCheck a3;  // h decreasing then increasing around x0_bar
    ConditionCheck a4;  // h(x) -> infinity

    bool all_pass() const noexcept { return a1.pass && a2.pass && a3.pass && a4.pass; }
};

/// 512 log-spaced points on [1e-6, 1e3].
std::vector<double> default_shape_grid();

ShapeReport validate_s_shape(const ImpactModel& model, std::span<const double> grid);
ShapeReport validate_s_shape(const ImpactModel& model);

}  // namespace optexec
