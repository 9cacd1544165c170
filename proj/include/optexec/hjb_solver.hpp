#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "optexec/closed_form.hpp"
#include "optexec/impact_model.hpp"

namespace optexec {

/// Reduced value W(t, x) on a uniform grid, with t the time left to the
/// horizon and x the remaining inventory. Proceeds of the risk-neutral
/// problem are c + s W(t, x).
class ValueSurface {
public:
    ValueSurface() = default;
    ValueSurface(double horizon, double x_max, std::size_t nt, std::size_t nx);

    std::size_t nt() const noexcept { return nt_; }  // number of time steps
    std::size_t nx() const noexcept { return nx_; }  // number of inventory steps
    double horizon() const noexcept { return horizon_; }
    double x_max() const noexcept { return x_max_; }
    double dt() const noexcept { return horizon_ / static_cast<double>(nt_); }
    double dx() const noexcept { return x_max_ / static_cast<double>(nx_); }
    double t_at(std::size_t n) const noexcept { return dt() * static_cast<double>(n); }
    double x_at(std::size_t i) const noexcept { return dx() * static_cast<double>(i); }

    double& w(std::size_t n, std::size_t i) { return w_[n * (nx_ + 1) + i]; }
    double w(std::size_t n, std::size_t i) const { return w_[n * (nx_ + 1) + i]; }
    double& policy(std::size_t n, std::size_t i) { return policy_[n * (nx_ + 1) + i]; }
    double policy(std::size_t n, std::size_t i) const { return policy_[n * (nx_ + 1) + i]; }
    const std::vector<double>& w_values() const noexcept { return w_; }
    const std::vector<double>& policy_values() const noexcept { return policy_; }

    bool has_policy() const noexcept { return has_policy_; }
    void set_has_policy(bool v) noexcept { has_policy_ = v; }

    /// Bilinear interpolation of W; throws outside the grid.
    double interpolate(double t, double x) const;

    // Solve metadata.
    double y_max = 0.0;
    double x0_bar = 0.0;
    double mu_tilde = 0.0;
    std::size_t substeps = 0;      // explicit sub-steps per grid time step
    int y_max_doublings = 0;
    double saturation_fraction = 0.0;

private:
    double horizon_ = 0.0;
    double x_max_ = 0.0;
    std::size_t nt_ = 0;
    std::size_t nx_ = 0;
    std::vector<double> w_;
    std::vector<double> policy_;
    bool has_policy_ = false;
};

struct HjbOptions {
    std::size_t nt = 400;
    std::size_t nx = 400;
    double y_max = 0.0;            // <= 0 selects default_y_max
    int max_doublings = 6;         // automatic y_max doublings
    double saturation_tol = 1e-3;  // fraction of nodes allowed at y_max
    double w_eps = 1e-12;          // below this W the control is grid-searched
    int fallback_points = 512;
    double growth_limit = 1e6;     // W / (x e^{|mu_tilde| T}) guard
    double residual_t_min = 0.0;   // hjb_residual skips rows with t below this
};

/// max(4 nu_h, 4 x_max / T, 2 x0_bar + 1); nu_h is skipped when undefined.
double default_y_max(const ImpactModel& m, double mu_tilde, double horizon, double x_max);

/// One explicit step at a node from its value w and left neighbour w_left.
/// Non-decreasing in both arguments when dt (y_max / dx + mu_tilde + g(y_max)) <= 1.
double upwind_update(double w, double w_left, double dx, double dt, const ImpactModel& m,
                     double mu_tilde, double y_max, const HjbOptions& options = {});

/// Explicit monotone upwind scheme for
///   dW/dt = sup_{0 <= y <= y_max} { y (1 - dW/dx) - W (mu_tilde + g(y)) },
///   W(t, 0) = W(0, x) = 0,
/// marching in time-to-horizon with CFL sub-stepping.
ValueSurface solve_reduced_hjb(const ImpactModel& m, double mu_tilde, double horizon, double x_max,
                               const HjbOptions& options = {});

/// Fixed-truncation form: no automatic doubling of y_max.
ValueSurface solve_reduced_hjb(const ImpactModel& m, double mu_tilde, double horizon, double x_max,
                               std::size_t nt, std::size_t nx, double y_max);

/// Optimal speed at every node from the discrete gradient of W. Every entry
/// is 0 or strictly above x0_bar.
std::vector<double> extract_policy(const ValueSurface& surface, const ImpactModel& m,
                                   const HjbOptions& options = {});

/// c + s W(t, x).
double full_value_from_reduced(double c, double s, const ValueSurface& surface, double t, double x);

/// Max over interior nodes of |(W^n - W^{n-1}) / dt - F(W^n)| with F the
/// upwind Hamiltonian. Row n = 0, column i = 0 and rows with
/// t < options.residual_t_min are excluded.
double hjb_residual(const ValueSurface& surface, const ImpactModel& m, double mu_tilde,
                    const HjbOptions& options = {});

struct DeterministicOptimum {
    double value = 0.0;  // per unit initial price
    Schedule schedule = Schedule::zero(1.0);
    int evaluations = 0;
};

struct ScheduleSearchOptions {
    int starts = 6;
    std::uint64_t seed = 7;
    int nelder_mead_iterations = 4000;
    int polish_sweeps = 30;
};

/// Best piecewise-constant schedule with total sales <= x0, found by
/// multi-start Nelder-Mead plus pairwise-transfer polishing. A lower bound
/// on W(T, x0).
DeterministicOptimum optimize_deterministic_schedule(const ImpactModel& m, double mu_tilde,
                                                     double horizon, double x0, int n_pieces,
                                                     const ScheduleSearchOptions& options = {});

}  // namespace optexec
