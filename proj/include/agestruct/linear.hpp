#pragma once
// Frozen-rate comparison model: renewal simulation, the basic reproduction
// number, the Lotka root, the asymptotic age profile, and two-sided envelope
// bounds that trap the nonlinear solution between two frozen-rate runs.
//
// The model is a pair of cell-center rows: fertility beta_c(a) and total
// mortality mu_c(a).  Its stepper is the same kernel the nonlinear module
// uses, so a nonlinear run with frozen feedback reproduces a linear run
// bit for bit.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "quadrature.hpp"
#include "rates.hpp"
#include "simulate.hpp"

namespace agestruct {

struct LinearModel {
    const AgeGrid* grid = nullptr;
    std::vector<double> beta_c;  // fertility at cell centers
    std::vector<double> mu_c;    // total mortality at cell centers
    // caps used when the model was built as a comparison envelope (0 = none)
    double cap0 = 0.0, cap1 = 0.0;

    SurvivalTable survival() const {
        SurvivalTable s;
        s.grid = grid;
        s.mu_cells = mu_c;
        s.exponent = cumulative_boundary(*grid, mu_c);
        return s;
    }
};

inline LinearModel frozen_model(const Rates& r, const AgeGrid& g, double x0, double x1) {
    LinearModel m;
    m.grid = &g;
    m.beta_c.assign(g.n, 0.0);
    m.mu_c = mortality_cells(r, g, x0, x1);
    const double v2 = r.eta2(x0);
    for (std::size_t j = 0; j < g.n; ++j) {
        double a = g.center(j);
        if (g.in_window(a)) m.beta_c[j] = r.beta(a, v2);
    }
    return m;
}

// Expected lifetime offspring under the frozen rates.
inline double r0_linear(const LinearModel& m) {
    const AgeGrid& g = *m.grid;
    SurvivalTable s = m.survival();
    std::vector<double> v(g.n);
    for (std::size_t j = 0; j < g.n; ++j) v[j] = m.beta_c[j] * s.birth_to_center(j);
    return integrate(g, v);
}

// q(lambda) = int e^{-lambda a} beta(a) Pi(0,a) da, strictly decreasing.
inline double discounted_r0(const LinearModel& m, double lambda) {
    const AgeGrid& g = *m.grid;
    SurvivalTable s = m.survival();
    std::vector<double> v(g.n);
    for (std::size_t j = 0; j < g.n; ++j)
        v[j] = std::exp(-lambda * g.center(j)) * m.beta_c[j] * s.birth_to_center(j);
    return integrate(g, v);
}

// The unique real growth exponent: q(lambda0) = 1.  Sign matches R0 - 1.
inline double lotka_root(const LinearModel& m) {
    bool any = false;
    for (double b : m.beta_c)
        if (b > 0.0) { any = true; break; }
    if (!any) throw domain_error("lotka_root: fertility is identically zero, no root exists");
    return monotone_inverse([&](double lam) { return discounted_r0(m, lam); }, 1.0, 0.05,
                            1e-14);
}

// ---------------------------------------------------------------------------
// Asymptotic age profile: the renewal solution converges (after scaling by
// e^{-lambda0 t}) to c * e^{-lambda0 a} Pi(0,a), with the constant c given by
// an explicit projection of the initial profile.

struct AsymptoticProfile {
    double lambda0 = 0.0;
    double coefficient = 0.0;       // projection constant c
    std::vector<double> profile;    // c * e^{-lambda0 a} Pi(0, a)
    bool boundary_class = false;    // initial data carries no renewable mass
};

inline AsymptoticProfile asymptotic_profile(const LinearModel& m,
                                            const std::vector<double>& phi0) {
    const AgeGrid& g = *m.grid;
    AsymptoticProfile out;
    out.lambda0 = lotka_root(m);
    SurvivalTable s = m.survival();
    std::vector<double> pi(g.n);
    for (std::size_t j = 0; j < g.n; ++j) pi[j] = s.birth_to_center(j);

    // inner(b) = int_0^b e^{lambda tau} phi0(tau) / Pi(0,tau) dtau
    std::vector<double> inner(g.n);
    double acc = 0.0;
    for (std::size_t j = 0; j < g.n; ++j) {
        const double cell = std::exp(out.lambda0 * g.center(j)) * phi0[j] / pi[j] * g.da;
        inner[j] = acc + 0.5 * cell;
        acc += cell;
    }
    std::vector<double> num(g.n), den(g.n);
    for (std::size_t j = 0; j < g.n; ++j) {
        const double disc = std::exp(-out.lambda0 * g.center(j)) * pi[j];
        num[j] = m.beta_c[j] * disc * inner[j];
        den[j] = m.beta_c[j] * g.center(j) * disc;
    }
    const double numerator = integrate(g, num);
    const double denominator = integrate(g, den);
    out.coefficient = numerator / denominator;
    out.boundary_class = !(numerator > 0.0);
    out.profile.resize(g.n);
    for (std::size_t j = 0; j < g.n; ++j)
        out.profile[j] = out.coefficient * std::exp(-out.lambda0 * g.center(j)) * pi[j];
    return out;
}

// ---------------------------------------------------------------------------
// Renewal simulation: identical kernel and instrumentation as the nonlinear
// module, with the rates frozen once.

inline TrajectoryRecord simulate_linear(const LinearModel& m, std::vector<double> p,
                                        double t_end, double snapshot_every = 0.0) {
    const AgeGrid& g = *m.grid;
    if (!(t_end > 0.0)) throw domain_error("simulate_linear: t_end must be positive");
    const long long steps = std::llround(t_end / g.da);
    if (std::abs(steps * g.da - t_end) > 1e-9 * std::max(1.0, t_end))
        throw domain_error("simulate_linear: t_end must be a multiple of da");
    if (p.size() != g.n)
        throw domain_error("simulate_linear: density size does not match the grid");

    TrajectoryRecord rec;
    rec.grid = g;
    rec.rows.reserve(static_cast<std::size_t>(steps) + 1);
    double beta_sup = 0.0, mu_sup = 0.0;
    for (std::size_t j = 0; j < g.n; ++j) {
        beta_sup = std::max(beta_sup, m.beta_c[j]);
        mu_sup = std::max(mu_sup, m.mu_c[j]);
    }
    rec.omega_bound = beta_sup + mu_sup;

    std::vector<double> decay(g.n);
    for (std::size_t j = 0; j < g.n; ++j) decay[j] = std::exp(-m.mu_c[j] * g.da);

    const detail::WindowMasks wm = detail::window_masks(g);
    std::vector<double> scratch(g.n);
    long long snap_stride = 0;
    if (snapshot_every > 0.0)
        snap_stride = std::max<long long>(1, std::llround(snapshot_every / g.da));

    double log_t0 = 0.0;
    bool have_t0 = false;
    for (long long k = 0;; ++k) {
        for (std::size_t j = 0; j < g.n; ++j) scratch[j] = m.beta_c[j] * p[j];
        const double B = integrate(g, scratch);
        TrajectoryRow row;
        row.t = static_cast<double>(k) * g.da;
        row.B = B;
        row.J = detail::masked_total(g, p, scratch, wm.j_lo[0], wm.j_hi[0]);
        row.R = detail::masked_total(g, p, scratch, wm.j_lo[1], wm.j_hi[1]);
        row.S = detail::masked_total(g, p, scratch, wm.j_lo[2], wm.j_hi[2]);
        row.T = row.J + row.R + row.S;
        row.Q0 = row.T;
        row.Q1 = row.S;
        rec.rows.push_back(row);

        if (!std::isfinite(B) || !std::isfinite(row.T))
            throw domain_error("simulate_linear: numeric failure at step " + std::to_string(k));
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
            if (excess > 1e-9) rec.growth_bound_ok = false;
        }
        if (snap_stride > 0 && (k % snap_stride == 0 || k == steps)) rec.snapshots.emplace(k, p);
        if (k == steps) break;
        step_frozen(g, p, decay, m.beta_c, scratch);
    }
    rec.final_density = std::move(p);
    return rec;
}

// Boundary of the renewable class: the first cell boundary above the last
// fertile cell.  Initial data with all mass above it never produces births.
inline double fertility_support_bound(const LinearModel& m) {
    const AgeGrid& g = *m.grid;
    std::size_t last = 0;
    bool any = false;
    for (std::size_t j = 0; j < g.n; ++j)
        if (m.beta_c[j] > 0.0) { last = j; any = true; }
    if (!any) return 0.0;
    return g.boundary(last + 1);
}

inline bool in_renewable_class(const LinearModel& m, const std::vector<double>& phi0) {
    const AgeGrid& g = *m.grid;
    const double a_tilde = fertility_support_bound(m);
    if (a_tilde == 0.0) return false;
    std::vector<double> v = phi0;
    const std::size_t k = g.boundary_index(a_tilde, "in_renewable_class");
    for (std::size_t j = k; j < g.n; ++j) v[j] = 0.0;
    return integrate(g, v) > 0.0;
}

// Persistence diagnostics of a renewal run: when the fertility-weighted size
// first becomes positive and whether it stays positive afterwards.
struct PersistenceReport {
    bool entered = false;        // fertility-weighted size became positive
    double first_positive_t = 0.0;
    double min_after = 0.0;      // minimum of the weighted size from then on
    bool persistent = false;
};

inline PersistenceReport persistence_check(const LinearModel& m, const std::vector<double>& phi0,
                                           double t_end) {
    const AgeGrid& g = *m.grid;
    PersistenceReport rep;
    TrajectoryRecord rec = simulate_linear(m, phi0, t_end);
    // B(t) is exactly the fertility-weighted size of the state at t
    bool entered = false;
    double min_after = std::numeric_limits<double>::infinity();
    for (const TrajectoryRow& row : rec.rows) {
        if (!entered && row.B > 0.0) {
            entered = true;
            rep.first_positive_t = row.t;
        }
        if (entered) min_after = std::min(min_after, row.B);
    }
    rep.entered = entered;
    rep.min_after = entered ? min_after : 0.0;
    rep.persistent = entered && min_after > 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Comparison envelopes and the sandwich bound.

struct Envelopes {
    LinearModel lower;  // smallest fertility, largest mortality
    LinearModel upper;  // largest fertility, smallest mortality
};

// Envelopes exist when fertility does not rise with the population and
// mortality does not fall (checked structurally); the mortality cap then
// comes from the population ceilings (cap0, cap1).
inline Envelopes comparison_envelopes(const Rates& r, const AgeGrid& g, double cap0,
                                      double cap1) {
    if (!r.beta_mod.nonincreasing())
        throw domain_error(
            "comparison_envelopes: fertility modulation is not monotone, envelopes "
            "unavailable");
    for (std::size_t j = 0; j < g.n; ++j) {
        const double a = g.center(j);
        if (r.mu0.dv(a) < 0.0 || r.mu1.dv(a) < 0.0)
            throw domain_error(
                "comparison_envelopes: mortality falls with the population at age " +
                std::to_string(a) + ", envelopes unavailable");
    }
    Envelopes env;
    env.upper = frozen_model(r, g, 0.0, 0.0);
    env.lower = frozen_model(r, g, cap0, cap1);
    env.lower.cap0 = env.upper.cap0 = cap0;
    env.lower.cap1 = env.upper.cap1 = cap1;
    return env;
}

struct SandwichReport {
    double max_lower_violation = 0.0;  // max over (t,a) of (lower - p)+
    double max_upper_violation = 0.0;  // max over (t,a) of (p - upper)+
    bool norm_ordered = true;          // ||lower|| <= ||p|| <= ||upper|| per step
    double max_norm_violation = 0.0;
    bool cap_breached = false;         // nonlinear sizes left [0, cap]
    double cap0 = 0.0, cap1 = 0.0;
    double t_end = 0.0, da = 0.0;
};

// Runs the nonlinear model and the two envelope models from the same initial
// profile in lockstep and reports the worst pointwise and norm violations of
// the two-sided bound.
inline SandwichReport sandwich_check(const Rates& r, const AgeGrid& g,
                                     const std::vector<double>& phi0, double t_end, double cap0,
                                     double cap1) {
    Envelopes env = comparison_envelopes(r, g, cap0, cap1);
    SandwichReport rep;
    rep.cap0 = cap0;
    rep.cap1 = cap1;
    rep.t_end = t_end;
    rep.da = g.da;

    const long long steps = std::llround(t_end / g.da);
    if (std::abs(steps * g.da - t_end) > 1e-9 * std::max(1.0, t_end))
        throw domain_error("sandwich_check: t_end must be a multiple of da");

    const RateTables tab(r, g);
    std::vector<double> lo = phi0, mid = phi0, hi = phi0;
    std::vector<double> decay_lo(g.n), decay_hi(g.n), decay_mid(g.n), fert_mid(g.n);
    for (std::size_t j = 0; j < g.n; ++j) {
        decay_lo[j] = std::exp(-env.lower.mu_c[j] * g.da);
        decay_hi[j] = std::exp(-env.upper.mu_c[j] * g.da);
    }
    std::vector<double> scratch(g.n);

    for (long long k = 0;; ++k) {
        double worst_lo = 0.0, worst_hi = 0.0;
        for (std::size_t j = 0; j < g.n; ++j) {
            worst_lo = std::max(worst_lo, lo[j] - mid[j]);
            worst_hi = std::max(worst_hi, mid[j] - hi[j]);
        }
        rep.max_lower_violation = std::max(rep.max_lower_violation, worst_lo);
        rep.max_upper_violation = std::max(rep.max_upper_violation, worst_hi);
        const double n_lo = integrate(g, lo), n_mid = integrate(g, mid),
                     n_hi = integrate(g, hi);
        const double norm_gap = std::max(n_lo - n_mid, n_mid - n_hi);
        rep.max_norm_violation = std::max(rep.max_norm_violation, norm_gap);
        if (norm_gap > 0.0) rep.norm_ordered = false;

        if (k == steps) break;

        // nonlinear step-start rates
        for (std::size_t j = 0; j < g.n; ++j) scratch[j] = tab.w0[j] * mid[j];
        const double q0 = integrate(g, scratch);
        for (std::size_t j = 0; j < g.n; ++j) scratch[j] = tab.w1[j] * mid[j];
        const double q1 = integrate(g, scratch);
        if (q0 > cap0 || q1 > cap1 || q0 < 0.0 || q1 < 0.0) rep.cap_breached = true;
        const double v0 = r.eta0(q0), v1 = r.eta1(q1);
        const double mod = r.beta_mod.value(r.eta2(q0));
        for (std::size_t j = 0; j < g.n; ++j) {
            const double mu = tab.mu0_base[j] + tab.mu0_slope[j] * v0 +
                              tab.mu1_slope[j] * v1 + tab.mu2[j];
            decay_mid[j] = std::exp(-mu * g.da);
            fert_mid[j] = tab.beta_age[j] * mod;
        }
        step_frozen(g, lo, decay_lo, env.lower.beta_c, scratch);
        step_frozen(g, mid, decay_mid, fert_mid, scratch);
        step_frozen(g, hi, decay_hi, env.upper.beta_c, scratch);
    }
    return rep;
}

}  // namespace agestruct
