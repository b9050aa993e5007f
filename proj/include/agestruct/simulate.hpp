#pragma once
// Time integration of the nonlinear system along characteristics.
//
// The scheme walks the age grid with dt = da: every cohort moves up one cell
// per step and decays by exp(-mu * dt) with the mortalities evaluated at the
// step-start weighted sizes (Q0, Q1); the youngest cell is refilled from the
// birth output of the step-start density.  The scheme is first-order accurate,
// transport-exact, and unconditionally positive.
//
// Recorded per step: B, Q0, Q1 and the juvenile / reproductive / senescent
// window totals J, R, S.  The grand total is defined as T := J + R + S, so
// additivity holds exactly by construction.

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "quadrature.hpp"
#include "rates.hpp"

namespace agestruct {

struct TrajectoryRow {
    double t = 0.0;
    double B = 0.0;   // birth rate, individuals/year
    double Q0 = 0.0;  // omega0-weighted size
    double Q1 = 0.0;  // omega1-weighted size
    double J = 0.0;   // integral over [0, a_min)
    double R = 0.0;   // integral over [a_min, a_max)
    double S = 0.0;   // integral over [a_max, a1]
    double T = 0.0;   // J + R + S, exactly
};

struct TrajectoryRecord {
    AgeGrid grid;
    std::vector<TrajectoryRow> rows;
    // density snapshots keyed by step index (step * da = time in years)
    std::map<long long, std::vector<double>> snapshots;
    std::vector<double> final_density;

    // audit trail
    bool positive = true;          // no negative cell was ever produced
    double min_cell = 0.0;         // most negative cell seen (0 when clean)
    double omega_bound = 0.0;      // growth constant used for the norm bound
    bool growth_bound_ok = true;   // log T(t) <= log T(0) + omega t + slack
    double growth_log_excess = 0.0;
};

namespace detail {

// Per-window masked copies of the density.  The window edges sit on cell
// boundaries, so masking by cell center is exact.
struct WindowMasks {
    std::vector<std::size_t> j_lo;  // first cell of each window
    std::vector<std::size_t> j_hi;  // one past the last cell
};

inline WindowMasks window_masks(const AgeGrid& g) {
    WindowMasks m;
    std::size_t k_min = g.boundary_index(g.a_min, "juvenile window");
    std::size_t k_max = g.boundary_index(g.a_max, "reproductive window");
    m.j_lo = {0, k_min, k_max};
    m.j_hi = {k_min, k_max, g.n};
    return m;
}

// Integral of p restricted to cells [j_lo, j_hi), evaluated as the quadrature
// of the masked array over the full range.  The endpoint-slope corrections of
// the quadrature see the mask, so the three window totals add up to the
// full-range quadrature of p exactly (same cell weights, window by window).
inline double masked_total(const AgeGrid& g, const std::vector<double>& p,
                           std::vector<double>& scratch, std::size_t j_lo, std::size_t j_hi) {
    scratch.assign(g.n, 0.0);
    for (std::size_t j = j_lo; j < j_hi; ++j) scratch[j] = p[j];
    return integrate(g, scratch);
}

}  // namespace detail

// One frozen-rate transport step, shared by the nonlinear and the linear
// steppers so both produce bit-identical arithmetic: births are the
// quadrature of fert_row * p, every cohort shifts one cell with its decay
// factor, mass beyond the last cell leaves the domain.
inline double step_frozen(const AgeGrid& g, std::vector<double>& p,
                          const std::vector<double>& decay, const std::vector<double>& fert_row,
                          std::vector<double>& scratch) {
    scratch.resize(g.n);
    for (std::size_t j = 0; j < g.n; ++j) scratch[j] = fert_row[j] * p[j];
    const double B = integrate(g, scratch);
    for (std::size_t j = g.n; j-- > 1;) p[j] = p[j - 1] * decay[j - 1];
    p[0] = B;
    return B;
}

// Cached age-only slices of the rates, so the per-step work is a handful of
// fused multiply-adds and one exp per cell.
struct RateTables {
    std::vector<double> beta_age;   // beta(a, .) before modulation
    std::vector<double> mu0_base, mu0_slope;
    std::vector<double> mu1_slope;
    std::vector<double> mu2;
    std::vector<double> w0, w1;  // weight profiles at cell centers

    RateTables(const Rates& r, const AgeGrid& g) {
        beta_age.resize(g.n);
        mu0_base.resize(g.n);
        mu0_slope.resize(g.n);
        mu1_slope.resize(g.n);
        mu2.resize(g.n);
        w0.resize(g.n);
        w1.resize(g.n);
        for (std::size_t j = 0; j < g.n; ++j) {
            const double a = g.center(j);
            beta_age[j] = g.in_window(a) ? r.beta_age(a) : 0.0;
            mu0_base[j] = r.mu0.base(a);
            mu0_slope[j] = r.mu0.slope(a);
            mu1_slope[j] = r.mu1.slope(a);
            mu2[j] = r.mu2(a);
            w0[j] = r.omega0(a);
            w1[j] = r.omega1(a);
        }
    }
};

// Single public step: dt must equal the grid spacing (transport-exact).
inline std::vector<double> step(const Rates& r, const AgeGrid& g, const std::vector<double>& p,
                                double dt) {
    if (std::abs(dt - g.da) > 1e-12 * g.da)
        throw domain_error("step: dt must equal the grid spacing da");
    RateTables tab(r, g);
    std::vector<double> q0v(g.n), q1v(g.n);
    for (std::size_t j = 0; j < g.n; ++j) q0v[j] = tab.w0[j] * p[j];
    for (std::size_t j = 0; j < g.n; ++j) q1v[j] = tab.w1[j] * p[j];
    const double q0 = integrate(g, q0v);
    const double q1 = integrate(g, q1v);
    const double v0 = r.eta0(q0), v1 = r.eta1(q1), v2 = r.eta2(q0);
    const double mod = r.beta_mod.value(v2);
    std::vector<double> decay(g.n), fert(g.n);
    for (std::size_t j = 0; j < g.n; ++j) {
        const double mu = tab.mu0_base[j] + tab.mu0_slope[j] * v0 + tab.mu1_slope[j] * v1 +
                          tab.mu2[j];
        decay[j] = std::exp(-mu * dt);
        fert[j] = tab.beta_age[j] * mod;
    }
    std::vector<double> out = p, scratch;
    step_frozen(g, out, decay, fert, scratch);
    return out;
}

// Full nonlinear run.  snapshot_every = 0 disables snapshots; otherwise the
// density is stored at every multiple of snapshot_every and at the final time.
// ceilings (cap0, cap1) feed the growth-constant monitor.
inline TrajectoryRecord simulate(const Rates& r, const AgeGrid& g, std::vector<double> p,
                                 double t_end, double snapshot_every = 0.0, double cap0 = 0.0,
                                 double cap1 = 0.0) {
    if (!(t_end > 0.0)) throw domain_error("simulate: t_end must be positive");
    const long long steps = std::llround(t_end / g.da);
    if (std::abs(steps * g.da - t_end) > 1e-9 * std::max(1.0, t_end))
        throw domain_error("simulate: t_end must be a multiple of da");
    if (p.size() != g.n) throw domain_error("simulate: density size does not match the grid");

    TrajectoryRecord rec;
    rec.grid = g;
    rec.rows.reserve(static_cast<std::size_t>(steps) + 1);
    rec.omega_bound = growth_constant(r, g, cap0, cap1);

    const RateTables tab(r, g);
    const detail::WindowMasks wm = detail::window_masks(g);
    std::vector<double> scratch(g.n), decay(g.n), fert(g.n);

    long long snap_stride = 0;
    if (snapshot_every > 0.0) snap_stride = std::max<long long>(1, std::llround(snapshot_every / g.da));

    double log_t0 = 0.0;
    bool have_t0 = false;
    const double slack = 1e-9;

    for (long long k = 0;; ++k) {
        // instrument the current state
        for (std::size_t j = 0; j < g.n; ++j) scratch[j] = tab.w0[j] * p[j];
        const double q0 = integrate(g, scratch);
        for (std::size_t j = 0; j < g.n; ++j) scratch[j] = tab.w1[j] * p[j];
        const double q1 = integrate(g, scratch);
        const double v0 = r.eta0(q0), v1 = r.eta1(q1), v2 = r.eta2(q0);
        const double mod = r.beta_mod.value(v2);
        for (std::size_t j = 0; j < g.n; ++j) fert[j] = tab.beta_age[j] * mod;
        for (std::size_t j = 0; j < g.n; ++j) scratch[j] = fert[j] * p[j];
        const double B = integrate(g, scratch);

        TrajectoryRow row;
        row.t = static_cast<double>(k) * g.da;
        row.B = B;
        row.Q0 = q0;
        row.Q1 = q1;
        row.J = detail::masked_total(g, p, scratch, wm.j_lo[0], wm.j_hi[0]);
        row.R = detail::masked_total(g, p, scratch, wm.j_lo[1], wm.j_hi[1]);
        row.S = detail::masked_total(g, p, scratch, wm.j_lo[2], wm.j_hi[2]);
        row.T = row.J + row.R + row.S;
        rec.rows.push_back(row);

        if (!std::isfinite(B) || !std::isfinite(row.T))
            throw domain_error("simulate: numeric failure at step " + std::to_string(k));

        for (std::size_t j = 0; j < g.n; ++j)
            if (p[j] < rec.min_cell) rec.min_cell = p[j];
        if (rec.min_cell < 0.0) rec.positive = false;

        if (k == 0) {
            if (row.T > 0.0) {
                log_t0 = std::log(row.T);
                have_t0 = true;
            }
        } else if (have_t0 && row.T > 0.0) {
            const double excess = std::log(row.T) - (log_t0 + rec.omega_bound * row.t);
            if (excess > rec.growth_log_excess) rec.growth_log_excess = excess;
            if (excess > slack) rec.growth_bound_ok = false;
        }

        if (snap_stride > 0 && (k % snap_stride == 0 || k == steps))
            rec.snapshots.emplace(k, p);

        if (k == steps) break;

        // advance one step with the step-start rates
        for (std::size_t j = 0; j < g.n; ++j) {
            const double mu = tab.mu0_base[j] + tab.mu0_slope[j] * v0 +
                              tab.mu1_slope[j] * v1 + tab.mu2[j];
            decay[j] = std::exp(-mu * g.da);
        }
        step_frozen(g, p, decay, fert, scratch);
    }

    rec.final_density = std::move(p);
    return rec;
}

// Window totals of a single density: (J, R, S, T) with T := J + R + S.
struct Subpopulations {
    double J = 0.0, R = 0.0, S = 0.0, T = 0.0;
};

inline Subpopulations subpopulations(const AgeGrid& g, const std::vector<double>& p) {
    const detail::WindowMasks wm = detail::window_masks(g);
    std::vector<double> scratch;
    Subpopulations s;
    s.J = detail::masked_total(g, p, scratch, wm.j_lo[0], wm.j_hi[0]);
    s.R = detail::masked_total(g, p, scratch, wm.j_lo[1], wm.j_hi[1]);
    s.S = detail::masked_total(g, p, scratch, wm.j_lo[2], wm.j_hi[2]);
    s.T = s.J + s.R + s.S;
    return s;
}

// L1 distance between a one-shot run to t1 + t2 and a split run (t1, then t2
// more).  The deterministic scheme composes exactly, so this is 0 whenever
// both runs take the same step sequence; it returns 0 trivially when t2 = 0.
inline double semigroup_defect(const Rates& r, const AgeGrid& g, const std::vector<double>& p0,
                               double t1, double t2) {
    if (t2 == 0.0) return 0.0;
    TrajectoryRecord whole = simulate(r, g, p0, t1 + t2);
    TrajectoryRecord first = simulate(r, g, p0, t1);
    TrajectoryRecord second = simulate(r, g, first.final_density, t2);
    double dist = 0.0;
    for (std::size_t j = 0; j < g.n; ++j)
        dist += std::abs(whole.final_density[j] - second.final_density[j]) * g.da;
    return dist;
}

}  // namespace agestruct
