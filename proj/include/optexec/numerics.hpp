#pragma once

// Small numerical kernels shared by the solver modules: bracketed
// bisection for monotone functions, adaptive Gauss-Kronrod quadrature and
// golden-section minimization.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "optexec/errors.hpp"

namespace optexec::numerics {

/// Solves f(x) = target for a non-decreasing f on [lo, infinity) with
/// f(lo) <= target. The right end of the bracket starts at lo + 1 and its
/// distance to lo doubles until f exceeds the target; the bracket is then
/// bisected down to adjacent doubles and the endpoint with the smaller
/// residual is returned.
template <class F>
double solve_increasing(F&& f, double target, double lo) {
    double flo = f(lo);
    if (!(flo <= target)) {
        throw InvalidArgument("solve_increasing: f(lo) exceeds the target");
    }
    if (flo == target) return lo;

    double width = 1.0;
    double hi = lo + width;
    double fhi = f(hi);
    int doublings = 0;
    while (fhi < target) {
        if (++doublings > 1100 || !std::isfinite(fhi)) {
            throw NumericalFailure("solve_increasing: bracket expansion did not terminate");
        }
        lo = hi;
        flo = fhi;
        width *= 2.0;
        hi = lo + width;
        fhi = f(hi);
    }
    if (fhi == target) return hi;

    for (int it = 0; it < 2200; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm < target) {
            lo = mid;
            flo = fm;
        } else if (fm > target) {
            hi = mid;
            fhi = fm;
        } else {
            return mid;
        }
    }
    return (target - flo) <= (fhi - target) ? lo : hi;
}

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
std::pair<double, double> gauss_kronrod_15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double r = 0.5 * (b - a);
    const double fc = f(c);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = r * kKronrodNodes[j];
        const double pair = f(c - dx) + f(c + dx);
        kronrod += kKronrodWeights[j] * pair;
        if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
    }
    return {kronrod * r, std::abs((kronrod - gauss) * r)};
}

template <class F>
double adaptive_gk(F& f, double a, double b, double abs_tol, int depth, std::size_t& evals) {
    const double m = 0.5 * (a + b);
    const auto [left, el] = gauss_kronrod_15(f, a, m);
    const auto [right, er] = gauss_kronrod_15(f, m, b);
    evals += 30;
    const double sum = left + right;
    if (el + er <= abs_tol || depth <= 0 || m <= a || m >= b) {
        return sum;
    }
    return adaptive_gk(f, a, m, 0.5 * abs_tol, depth - 1, evals) +
           adaptive_gk(f, m, b, 0.5 * abs_tol, depth - 1, evals);
}

}  // namespace detail

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
};

/// Adaptive Gauss-Kronrod (7/15) quadrature of a smooth integrand on
/// [a, b]. The integrand must be finite on the open interval; endpoint
/// singularities should be removed by the caller with a substitution.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double rel_tol = 1e-12,
                           int max_depth = 40) {
    QuadratureResult out;
    if (a == b) return out;
    auto [whole, err] = detail::gauss_kronrod_15(f, a, b);
    out.evaluations = 15;
    const double tol = std::max(rel_tol * std::abs(whole), 1e-300);
    if (err <= tol) {
        out.value = whole;
        out.error_estimate = err;
        return out;
    }
    out.value = detail::adaptive_gk(f, a, b, tol, max_depth, out.evaluations);
    out.error_estimate = tol;
    if (!std::isfinite(out.value)) {
        throw NumericalFailure("integrate: non-finite quadrature value");
    }
    return out;
}

/// Golden-section minimization of a unimodal function on [a, b].
template <class F>
std::pair<double, double> golden_minimize(F&& f, double a, double b, double x_tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > x_tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if (c >= d) break;
    }
    double best_x = fc <= fd ? c : d;
    double best_f = std::min(fc, fd);
    const double fa = f(a);
    const double fb = f(b);
    if (fa < best_f) {
        best_x = a;
        best_f = fa;
    }
    if (fb < best_f) {
        best_x = b;
        best_f = fb;
    }
    return {best_x, best_f};
}

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
};

/// Nelder-Mead downhill simplex with the standard coefficients (1, 2, 0.5,
/// 0.5). Stops when the spread of simplex values drops below f_tol or after
/// max_iter iterations.
template <class F>
SimplexResult nelder_mead(F&& f, std::vector<double> start, double step, int max_iter,
                          double f_tol) {
    const std::size_t n = start.size();
    std::vector<std::vector<double>> pts(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    int it = 0;
    for (; it < max_iter; ++it) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];
        if (std::abs(vals[worst] - vals[best]) <= f_tol * (1.0 + std::abs(vals[best]))) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t idx = order[k];
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[idx][j] / static_cast<double>(n);
        }
        const auto along = [&](double coef, std::vector<double>& out) {
            for (std::size_t j = 0; j < n; ++j) {
                out[j] = centroid[j] + coef * (pts[worst][j] - centroid[j]);
            }
            return f(out);
        };
        const double fr = along(-1.0, trial);
        if (fr < vals[best]) {
            const double fe = along(-2.0, trial2);
            if (fe < fr) {
                pts[worst] = trial2;
                vals[worst] = fe;
            } else {
                pts[worst] = trial;
                vals[worst] = fr;
            }
        } else if (fr < vals[second]) {
            pts[worst] = trial;
            vals[worst] = fr;
        } else {
            const double fc = fr < vals[worst] ? along(-0.5, trial2) : along(0.5, trial2);
            if (fc < std::min(fr, vals[worst])) {
                pts[worst] = trial2;
                vals[worst] = fc;
            } else {
                for (std::size_t k = 1; k <= n; ++k) {
                    const std::size_t idx = order[k];
                    for (std::size_t j = 0; j < n; ++j) {
                        pts[idx][j] = pts[best][j] + 0.5 * (pts[idx][j] - pts[best][j]);
                    }
                    vals[idx] = f(pts[idx]);
                }
            }
        }
    }
    const auto best_it = std::min_element(vals.begin(), vals.end());
    const auto best_idx = static_cast<std::size_t>(best_it - vals.begin());
    return {pts[best_idx], *best_it, it};
}

/// Pairwise (cascade) summation; the reduction order depends only on the
/// length of the input.
template <class It>
double pairwise_sum(It first, It last) {
    const auto n = static_cast<std::size_t>(last - first);
    if (n <= 8) {
        double s = 0.0;
        for (; first != last; ++first) s += *first;
        return s;
    }
    const auto half = first + static_cast<std::ptrdiff_t>(n / 2);
    return pairwise_sum(first, half) + pairwise_sum(half, last);
}

}  // namespace optexec::numerics
