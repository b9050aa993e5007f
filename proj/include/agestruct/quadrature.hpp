#pragma once
// Quadrature on cell-centered samples.
//
// `integrate` is the midpoint rule plus an endpoint-slope correction
// (da^2/24) * (f'(hi) - f'(lo)) with one-sided three-point slopes taken from
// inside the window. By Euler-Maclaurin this cancels the midpoint rule's
// leading error term, so smooth integrands converge at fourth order while the
// rule stays exactly linear in the sampled values and exact for affine f.
// Integrands with interior kinks (rates switch on/off at a_min/a_max, which
// are cell boundaries on the grids used here) keep second-order accuracy.
//
// Exponents of survival factors use the *plain* midpoint prefix sums
// (`cumulative_boundary`), which makes survival multiplicativity
// Pi(b,a) * Pi(a,c) = Pi(b,c) an exact identity in floating point up to
// rounding, rather than a discretization property.

#include <cstddef>
#include <functional>
#include <vector>

#include "grid.hpp"

namespace agestruct {

// Integral of cell-sampled values over the aligned window [lo, hi].
inline double integrate(const AgeGrid& g, const std::vector<double>& vals,
                        double lo, double hi) {
    if (vals.size() != g.n) throw domain_error("integrate: sample size mismatch");
    if (lo > hi) throw domain_error("integrate: window is inverted");
    std::size_t k0 = g.boundary_index(lo, "integrate");
    std::size_t k1 = g.boundary_index(hi, "integrate");
    double sum = 0.0;
    for (std::size_t j = k0; j < k1; ++j) sum += vals[j];
    sum *= g.da;
    if (k1 - k0 >= 3) {
        const double inv = 1.0 / g.da;
        double dlo = (-2.0 * vals[k0] + 3.0 * vals[k0 + 1] - vals[k0 + 2]) * inv;
        double dhi = (2.0 * vals[k1 - 1] - 3.0 * vals[k1 - 2] + vals[k1 - 3]) * inv;
        sum += (g.da * g.da / 24.0) * (dhi - dlo);
    }
    return sum;
}

inline double integrate(const AgeGrid& g, const std::vector<double>& vals) {
    return integrate(g, vals, 0.0, g.a1);
}

template <class F>
double integrate_fn(const AgeGrid& g, F&& f, double lo, double hi) {
    std::vector<double> vals(g.n);
    for (std::size_t j = 0; j < g.n; ++j) vals[j] = f(g.center(j));
    return integrate(g, vals, lo, hi);
}

// Prefix sums of cell samples up to each cell boundary: out[k] = da * sum_{j<k} vals[j].
inline std::vector<double> cumulative_boundary(const AgeGrid& g,
                                               const std::vector<double>& vals) {
    if (vals.size() != g.n) throw domain_error("cumulative_boundary: sample size mismatch");
    std::vector<double> out(g.n + 1);
    out[0] = 0.0;
    for (std::size_t j = 0; j < g.n; ++j) out[j + 1] = out[j] + vals[j] * g.da;
    return out;
}

// Generic monotone scalar inverse by bracket growth + bisection.
// `f` must be continuous and strictly monotone near the solution; the bracket
// is expanded geometrically from [0, guess] (both directions) until it
// straddles `target`.
inline double monotone_inverse(const std::function<double(double)>& f, double target,
                               double guess = 1.0, double xtol = 1e-12,
                               int max_iter = 200) {
    double lo = 0.0, hi = (guess > 0.0 ? guess : 1.0);
    double flo = f(lo), fhi = f(hi);
    const bool increasing = fhi >= flo;
    auto below = [&](double fx) { return increasing ? fx < target : fx > target; };
    int grow = 0;
    while (below(fhi)) {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = f(hi);
        if (++grow > 200) throw domain_error("monotone_inverse: no upper bracket");
    }
    grow = 0;
    while (!below(flo) && flo != target) {
        hi = lo;
        fhi = flo;
        lo = (lo == 0.0 ? -(guess > 0.0 ? guess : 1.0) : lo * 2.0);
        flo = f(lo);
        if (++grow > 200) throw domain_error("monotone_inverse: no lower bracket");
    }
    for (int i = 0; i < max_iter && hi - lo > xtol * (1.0 + std::abs(lo)); ++i) {
        double mid = 0.5 * (lo + hi);
        if (below(f(mid)))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Bisection for a root of f on [lo, hi]; requires a sign change.
inline double bisect_root(const std::function<double(double)>& f, double lo, double hi,
                          double xtol = 1e-12, int max_iter = 200) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw domain_error("bisect_root: no sign change on the bracket");
    for (int i = 0; i < max_iter && hi - lo > xtol * (1.0 + std::abs(lo)); ++i) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace agestruct
