#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optexec/closed_form.hpp"
#include "optexec/hjb_solver.hpp"
#include "optexec/impact_model.hpp"

namespace optexec {

/// Drift b(y) and volatility sigma(y) of the log-price, with declared bounds.
class CoefficientSet {
public:
    using Fn = std::function<double(double)>;

    static CoefficientSet black_scholes(double mu, double sigma);
    /// Bounds are spot-checked on a sample of log-prices in [-50, 50].
    CoefficientSet(Fn drift, Fn vol, double drift_bound, double vol_bound);

    double drift(double y) const { return constant_ ? mu_ : drift_(y); }
    double vol(double y) const { return constant_ ? sigma_ : vol_(y); }
    double drift_bound() const noexcept { return drift_bound_; }
    double vol_bound() const noexcept { return vol_bound_; }
    bool is_constant() const noexcept { return constant_; }

    /// Throws when |b| or |sigma| exceeds its declared bound at a sample.
    void check_bounds(std::span<const double> ys) const;

private:
    CoefficientSet() = default;

    Fn drift_;
    Fn vol_;
    double drift_bound_ = 0.0;
    double vol_bound_ = 0.0;
    bool constant_ = false;
    double mu_ = 0.0;
    double sigma_ = 0.0;
};

/// Deterministic schedule, or feedback on (time to horizon, inventory) read
/// from a solved value surface.
class Strategy {
public:
    static Strategy deterministic(Schedule schedule);
    static Strategy feedback(std::shared_ptr<const ValueSurface> surface);

    bool is_feedback() const noexcept { return static_cast<bool>(surface_); }
    double horizon() const noexcept;

    /// Selling speed at time t (from the start) with `remaining` shares left
    /// and horizon T. Zero once inventory is exhausted.
    double speed(double t, double remaining, double horizon) const;

private:
    std::optional<Schedule> schedule_;
    std::shared_ptr<const ValueSurface> surface_;
};

/// Feedback strategy reading y*(T - t, X_t) off the surface policy.
Strategy feedback_strategy_from_policy(std::shared_ptr<const ValueSurface> surface);

class UtilityFn {
public:
    using Fn = std::function<double(double c, double x, double s)>;

    /// u(c, x, s) = c.
    static UtilityFn risk_neutral();
    /// Caller-declared non-decreasing utility with polynomial growth of the
    /// given degree; spot-checked on a small lattice of states.
    static UtilityFn custom(Fn fn, double growth_degree);

    double operator()(double c, double x, double s) const { return fn_ ? fn_(c, x, s) : c; }
    bool is_risk_neutral() const noexcept { return !fn_; }

private:
    Fn fn_;
};

struct SimConfig {
    double c0 = 0.0;
    double x0 = 0.0;
    double s0 = 1.0;
    double horizon = 1.0;
    std::size_t n_paths = 1000;
    std::size_t n_steps = 100;
    std::uint64_t seed = 1;
    double y_min = -60.0;        // log-price absorption floor
    unsigned threads = 1;
    std::size_t keep_paths = 0;  // per-path terminal records retained
};

struct TerminalStats {
    double mean = 0.0;
    double variance = 0.0;
    std::vector<double> quantile_levels{0.05, 0.25, 0.5, 0.75, 0.95};
    std::vector<double> quantiles;
};

struct PathRecord {
    std::size_t index = 0;
    double c = 0.0;
    double x = 0.0;
    double s = 0.0;
    double utility = 0.0;
    bool absorbed = false;
};

struct SimResult {
    double mean_utility = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
    TerminalStats c_stats;
    TerminalStats x_stats;
    TerminalStats s_stats;
    std::size_t absorption_count = 0;
    std::vector<PathRecord> paths;  // first SimConfig::keep_paths paths
};

SimResult simulate(const Strategy& strategy, const CoefficientSet& coeffs, const ImpactModel& m,
                   const SimConfig& config, const UtilityFn& utility = UtilityFn::risk_neutral());

struct UnimpactedResult {
    TerminalStats z_stats;
    double std_error = 0.0;
    std::size_t n_paths = 0;
};

/// Terminal statistics of the price without impact, driven by the same
/// per-path noise as simulate.
UnimpactedResult simulate_unimpacted(const CoefficientSet& coeffs, double s0, double horizon,
                                     std::size_t n_paths, std::size_t n_steps, std::uint64_t seed,
                                     unsigned threads = 1);

/// Step-by-step states of one path, impacted (S) and unimpacted (Z).
struct PathTrace {
    std::vector<double> t;
    std::vector<double> s;
    std::vector<double> z;
    std::vector<double> c;
    std::vector<double> x;
    std::vector<double> speed;
};

PathTrace trace_path(const Strategy& strategy, const CoefficientSet& coeffs, const ImpactModel& m,
                     const SimConfig& config, std::size_t path_index);

struct NamedStrategy {
    std::string name;
    Strategy strategy;
};

struct StrategySummary {
    std::string name;
    double mean = 0.0;
    double std_error = 0.0;
};

struct PairwiseDifference {
    std::size_t first = 0;
    std::size_t second = 0;
    double mean = 0.0;  // mean of first - second
    double std_error = 0.0;
};

struct ComparisonTable {
    std::vector<StrategySummary> strategies;
    std::vector<PairwiseDifference> differences;
    std::vector<std::size_t> ranking;  // indices by decreasing mean
};

/// Runs every strategy on common random numbers (path i uses the same noise
/// for all strategies) and reports paired differences.
ComparisonTable compare_strategies(std::span<const NamedStrategy> strategies,
                                   const CoefficientSet& coeffs, const ImpactModel& m,
                                   const SimConfig& config,
                                   const UtilityFn& utility = UtilityFn::risk_neutral());

}  // namespace optexec
