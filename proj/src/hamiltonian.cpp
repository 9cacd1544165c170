#include "optexec/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

#include "optexec/errors.hpp"
#include "optexec/numerics.hpp"

namespace optexec {

namespace {

void require_positive_price(double s) {
    if (!(s > 0.0)) throw InvalidArgument("price s must be positive");
}

void require_a4(const ImpactModel& m) {
    if (m.violates_a4()) {
        throw A4Violation("the Hamiltonian closed form needs an impact model with h -> infinity");
    }
}

}  // namespace

double hamiltonian_objective(double y, double s, const Gradient& p, const ImpactModel& m) {
    return s * p.p_s * m.g(y) - (s * p.p_c - p.p_x) * y;
}

double script_h(double s, const Gradient& p) {
    require_positive_price(s);
    const double denom = s * p.p_s;
    if (!(denom > 0.0)) return 0.0;
    return (s * p.p_c - p.p_x) / denom;
}

double xi(double s, const Gradient& p, const ImpactModel& m) {
    require_positive_price(s);
    require_a4(m);
    if (!(p.p_s > 0.0)) return 0.0;
    const double ratio = script_h(s, p);
    if (!(ratio > m.h_at_threshold())) return 0.0;
    const double y = m.h_inverse(ratio);
    if (!(m.g(y) < ratio * y)) return 0.0;
    // h_inverse rounds to at least x0_bar; a rate equal to x0_bar cannot be
    // optimal because f keeps decreasing just past it.
    if (!(y > m.threshold())) return std::nextafter(m.threshold(), INFINITY);
    return y;
}

double reduced_hamiltonian(double ybar, const ImpactModel& m) {
    require_a4(m);
    const double y = m.h_inverse(std::max(ybar, m.h_at_threshold()));
    return std::min(m.g(y) - ybar * y, 0.0);
}

double hamiltonian_closed(double s, const Gradient& p, const ImpactModel& m) {
    require_positive_price(s);
    require_a4(m);
    if (!(p.p_s > 0.0)) throw InvalidArgument("hamiltonian_closed: requires p_s > 0");
    const double ratio = script_h(s, p);
    const double y = m.h_inverse(std::max(ratio, m.h_at_threshold()));
    return std::min(hamiltonian_objective(y, s, p, m), 0.0);
}

BruteForceMinimum hamiltonian_brute(double s, const Gradient& p, const ImpactModel& m,
                                    double y_max, int n) {
    require_positive_price(s);
    if (n < 2 || !(y_max > 0.0) || !std::isfinite(y_max)) {
        throw InvalidArgument("hamiltonian_brute: need n >= 2 and a positive y_max");
    }
    const auto f = [&](double y) { return hamiltonian_objective(y, s, p, m); };
    const double initial = y_max;
    BruteForceMinimum out;
    std::size_t best = 0;
    double step = 0.0;
    for (int doublings = 0;; ++doublings) {
        step = y_max / (n - 1);
        best = 0;
        double best_f = f(0.0);
        for (int i = 1; i < n; ++i) {
            const double v = f(step * i);
            if (v < best_f) {
                best_f = v;
                best = static_cast<std::size_t>(i);
            }
        }
        const bool at_edge = best == static_cast<std::size_t>(n - 1);
        if (!at_edge || doublings >= 20 || y_max >= initial * 1048576.0) {
            out.interior = !at_edge;
            break;
        }
        y_max *= 2.0;
    }
    const double lo = best == 0 ? 0.0 : step * static_cast<double>(best - 1);
    const double hi = std::min(y_max, step * static_cast<double>(best + 1));
    const auto [x, v] = numerics::golden_minimize(f, lo, hi, 1e-10 * std::max(1.0, hi));
    out.argmin = x;
    out.value = v;
    out.y_max = y_max;
    return out;
}

double xi_truncated(double s, const Gradient& p, const ImpactModel& m, double y_cap) {
    require_positive_price(s);
    require_a4(m);
    if (!(y_cap > m.threshold())) {
        throw InvalidArgument("xi_truncated: the cap must exceed x0_bar");
    }
    if (!(p.p_s > 0.0)) return 0.0;
    const double ratio = script_h(s, p);
    if (!(ratio > m.h_at_threshold())) return 0.0;
    double y = std::min(m.h_inverse(ratio), y_cap);
    if (!(y > m.threshold())) y = std::nextafter(m.threshold(), INFINITY);
    return hamiltonian_objective(y, s, p, m) < 0.0 ? y : 0.0;
}

}  // namespace optexec
