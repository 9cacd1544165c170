#pragma once

#include "optexec/impact_model.hpp"

namespace optexec {

/// Value gradient (d/dc, d/dx, d/ds) at a state.
struct Gradient {
    double p_c = 0.0;
    double p_x = 0.0;
    double p_s = 0.0;
};

/// Objective minimized by the Hamiltonian:
/// f(y; s, p) = s p_s g(y) - (s p_c - p_x) y.
double hamiltonian_objective(double y, double s, const Gradient& p, const ImpactModel& m);

/// Reward-per-unit-impact ratio (s p_c - p_x) / (s p_s), zero when s p_s <= 0.
double script_h(double s, const Gradient& p);

/// Optimal selling speed. Either 0 or strictly above x0_bar.
double xi(double s, const Gradient& p, const ImpactModel& m);

/// Reduced Hamiltonian inf_{y >= 0} { g(y) - ybar * y }.
double reduced_hamiltonian(double ybar, const ImpactModel& m);

/// inf_{y >= 0} f(y; s, p) in closed form; requires p_s > 0.
double hamiltonian_closed(double s, const Gradient& p, const ImpactModel& m);

struct BruteForceMinimum {
    double value = 0.0;
    double argmin = 0.0;
    double y_max = 0.0;  // after auto-expansion
    bool interior = true;
};

/// Grid search for inf f(y; s, p) over [0, y_max] with golden-section
/// polishing. y_max doubles (up to 2^20 times) while the grid argmin sits on
/// the right endpoint.
BruteForceMinimum hamiltonian_brute(double s, const Gradient& p, const ImpactModel& m,
                                    double y_max, int n);

/// Minimizer of f over [0, y_cap] built from the closed form: Xi when it
/// lies below the cap, otherwise y_cap or 0, whichever is smaller.
double xi_truncated(double s, const Gradient& p, const ImpactModel& m, double y_cap);

}  // namespace optexec
