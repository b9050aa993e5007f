#pragma once
// Constructive equilibrium solver.
//
// A positive equilibrium is built from two scalar reductions:
//   1) the juvenile-burden balance: Phi(Q1) = ln D(Q0), where D(Q0) is the
//      discounted reproduction number with the juvenile burden switched off
//      and Phi integrates the burden mortality over [0, a_min];
//   2) the weight-consistency map Theta(Q0) = Q1(Q0) * W0/W1, whose fixed
//      point pins Q0.
// Three structural cases are solved:
//   - standard: the burden depends on Q1 and D varies with Q0;
//   - fertility/adult-damped only (burden z-free): D(Q0) = 1 pins Q0 directly;
//   - burden-led (D constant because fertility and adult mortality are
//     z-free): Phi(Q1) = ln IGC pins Q1, and Theta is constant.
// All intermediate maps use the odd extensions that the affine-in-feedback
// rate families carry built in, so negative intermediate Q1 values are fine.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "quadrature.hpp"
#include "rates.hpp"

namespace agestruct {

enum class EquilibriumKind { trivial, positive };

struct DemographicStats {
    double mean_age = 0.0;      // normalized first moment, years
    double avg_lifespan = 0.0;  // total population over total deaths, years
};

struct EquilibriumSolution {
    EquilibriumKind kind = EquilibriumKind::trivial;
    double igc = 0.0;
    double q0_hat = 0.0;
    double q1_hat = 0.0;
    std::vector<double> phi_hat;        // empty-grid zeros for the trivial kind
    double residual_R = 0.0;            // |R(Q0_hat, Q1_hat) - 1|
    double residual_fixed_point = 0.0;  // |Theta(Q0_hat) - Q0_hat| (path-specific)
    DemographicStats stats;
};

// Discounted reproduction number: net reproduction with the juvenile burden
// switched off (its feedback size frozen at zero).
inline double discounted_reproduction(const Rates& r, const AgeGrid& g, double x) {
    return net_reproduction(r, g, x, 0.0);
}

// Juvenile-burden integral Phi(q) = int_0^{a_min} mu1(a, eta1(q)) da.  Odd in
// q because the affine family and the feedback maps are odd.
inline double juvenile_burden(const Rates& r, const AgeGrid& g, double q) {
    return integrate_fn(
        g, [&](double a) { return r.mu1(a, r.eta1(q)); }, 0.0, g.a_min);
}

// The Q1(Q0) map: inverts Phi at ln D(Q0).  Throws a bracket error when the
// burden has no feedback channel (Phi identically zero) but the target is not.
inline double q1_of_q0(const Rates& r, const AgeGrid& g, double x) {
    const double target = std::log(discounted_reproduction(r, g, x));
    if (r.flags().mu1_z_free) {
        if (target == 0.0) return 0.0;
        throw domain_error(
            "q1_of_q0: the juvenile burden ignores the population, so ln D(Q0) = " +
            std::to_string(target) + " has no preimage");
    }
    const double probe = juvenile_burden(r, g, 1.0);
    double guess = 1.0;
    if (probe > 0.0) guess = std::max(1.0, std::abs(target) / probe);
    // Near-ulp tolerance: Theta inherits this inverse's landing error scaled by
    // W0/W1, and the fixed-point residual reported upstream must reach 1e-10.
    return monotone_inverse([&](double q) { return juvenile_burden(r, g, q); }, target, guess,
                            1e-15);
}

// Weight totals of the survival profile at frozen sizes (x0, x1).
inline std::pair<double, double> weight_totals(const Rates& r, const AgeGrid& g, double x0,
                                               double x1) {
    SurvivalTable s = make_survival(r, g, x0, x1);
    std::vector<double> v0(g.n), v1(g.n);
    for (std::size_t j = 0; j < g.n; ++j) {
        const double pi = s.birth_to_center(j);
        const double a = g.center(j);
        v0[j] = r.omega0(a) * pi;
        v1[j] = r.omega1(a) * pi;
    }
    return {integrate(g, v0), integrate(g, v1)};
}

// Theta(Q0) = Q1(Q0) * W0 / W1 with the survival weights evaluated at
// (Q0, Q1(Q0)).  Its positive fixed points are the equilibrium Q0 values.
inline double theta(const Rates& r, const AgeGrid& g, double x) {
    const double q1 = q1_of_q0(r, g, x);
    auto [w0, w1] = weight_totals(r, g, x, q1);
    if (w1 <= 0.0) throw domain_error("theta: degenerate senescent weight");
    return q1 * w0 / w1;
}

// Equilibrium age profile phi(a) = Q0 * Pi(0,a) / W0 at frozen sizes.
inline std::vector<double> equilibrium_profile(const Rates& r, const AgeGrid& g, double q0,
                                               double x1) {
    SurvivalTable s = make_survival(r, g, q0, x1);
    std::vector<double> pi = s.birth_to_centers();
    std::vector<double> w(g.n);
    for (std::size_t j = 0; j < g.n; ++j) w[j] = r.omega0(g.center(j)) * pi[j];
    const double w0 = integrate(g, w);
    if (w0 <= 0.0) throw domain_error("equilibrium_profile: degenerate weights");
    std::vector<double> phi(g.n);
    for (std::size_t j = 0; j < g.n; ++j) phi[j] = q0 * pi[j] / w0;
    return phi;
}

inline DemographicStats demographic_stats(const Rates& r, const AgeGrid& g,
                                          const std::vector<double>& phi, double x0, double x1) {
    std::vector<double> mu = mortality_cells(r, g, x0, x1);
    std::vector<double> am(g.n), dm(g.n);
    for (std::size_t j = 0; j < g.n; ++j) {
        am[j] = g.center(j) * phi[j];
        dm[j] = mu[j] * phi[j];
    }
    const double total = integrate(g, phi);
    const double deaths = integrate(g, dm);
    if (total <= 0.0) throw domain_error("demographic_stats: empty profile");
    if (deaths <= 0.0) throw domain_error("demographic_stats: zero total mortality");
    DemographicStats st;
    st.mean_age = integrate(g, am) / total;
    st.avg_lifespan = total / deaths;
    return st;
}

namespace detail {

// Upper end of the Q0 range: the zero of ln D(x), found by geometric bracket
// growth from 0.  D(0) = IGC > 1 is the caller's responsibility.
inline double burden_free_ceiling(const Rates& r, const AgeGrid& g) {
    auto lnD = [&](double x) { return std::log(discounted_reproduction(r, g, x)); };
    double lo = 0.0, hi = 1.0;
    int grow = 0;
    while (lnD(hi) >= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++grow > 200)
            throw domain_error(
                "solve_equilibrium: no upper bound found - the discounted reproduction "
                "number never falls below 1");
    }
    return bisect_root(lnD, lo, hi, 1e-13);
}

// Newton polish for a root of `f` after bisection.  The bisection stop is
// scale-relative in x, so at large roots the landing can sit ~|f'| * 1e-7
// away in residual; a derivative step closes the gap to the absolute target.
// Guards: stay inside (lo, hi), require the residual to actually shrink.
inline double polish_root(const std::function<double(double)>& f, double x, double lo, double hi,
                          double target, int rounds = 8) {
    double fx = f(x);
    for (int i = 0; i < rounds && std::abs(fx) > target; ++i) {
        const double h = 1e-7 * (1.0 + std::abs(x));
        const double slope = (f(x + h) - f(x - h)) / (2.0 * h);
        if (std::abs(slope) < 1e-12) break;
        const double xn = x - fx / slope;
        if (!(xn > lo && xn < hi)) break;
        const double fn = f(xn);
        if (std::abs(fn) >= std::abs(fx)) break;
        x = xn;
        fx = fn;
    }
    return x;
}

}  // namespace detail

inline EquilibriumSolution solve_equilibrium(const Rates& r, const AgeGrid& g,
                                             double tol = 1e-10) {
    EquilibriumSolution sol;
    sol.igc = igc(r, g);
    if (sol.igc <= 1.0) {
        sol.kind = EquilibriumKind::trivial;
        sol.phi_hat.assign(g.n, 0.0);
        return sol;
    }

    const StructureFlags f = r.flags();
    double x1_feedback = 0.0;  // size the burden mortality is frozen at

    if (f.mu1_z_free && f.mu0_z_free && f.beta_z_constant) {
        throw domain_error(
            "solve_equilibrium: no upper bound found - no rate responds to the "
            "population while IGC > 1");
    } else if (f.mu1_z_free) {
        // Fertility or adult mortality damps growth; the burden channel is off.
        sol.q0_hat = detail::burden_free_ceiling(r, g);
        x1_feedback = 0.0;
        sol.residual_fixed_point = std::abs(discounted_reproduction(r, g, sol.q0_hat) - 1.0);
    } else if (f.mu0_z_free && f.beta_z_constant) {
        // D is constant at IGC; the burden balance alone pins Q1, and Theta is
        // a constant map whose value is the fixed point.
        const double target = std::log(sol.igc);
        const double probe = juvenile_burden(r, g, 1.0);
        const double guess = probe > 0.0 ? std::max(1.0, target / probe) : 1.0;
        const double q1 = monotone_inverse(
            [&](double q) { return juvenile_burden(r, g, q); }, target, guess, 1e-15);
        auto [w0, w1] = weight_totals(r, g, 0.0, q1);
        if (w1 <= 0.0) throw domain_error("solve_equilibrium: degenerate senescent weight");
        sol.q0_hat = q1 * w0 / w1;
        x1_feedback = q1;
        sol.residual_fixed_point = std::abs(theta(r, g, sol.q0_hat) - sol.q0_hat);
    } else {
        const double q0_tilde = detail::burden_free_ceiling(r, g);
        const double x_lo = 1e-9 * std::max(1.0, q0_tilde);
        const double x_hi = q0_tilde * (1.0 - 1e-12);
        auto gap = [&](double x) { return theta(r, g, x) - x; };
        sol.q0_hat = detail::polish_root(gap, bisect_root(gap, x_lo, x_hi, tol), x_lo, x_hi,
                                         0.1 * tol);
        x1_feedback = q1_of_q0(r, g, sol.q0_hat);
        sol.residual_fixed_point = std::abs(theta(r, g, sol.q0_hat) - sol.q0_hat);
    }

    sol.kind = EquilibriumKind::positive;
    sol.phi_hat = equilibrium_profile(r, g, sol.q0_hat, x1_feedback);
    sol.q1_hat = f.mu1_z_free ? weighted_total(g, r.omega1, sol.phi_hat) : x1_feedback;
    sol.residual_R = std::abs(net_reproduction(r, g, sol.q0_hat, x1_feedback) - 1.0);
    sol.stats = demographic_stats(r, g, sol.phi_hat, sol.q0_hat, x1_feedback);
    return sol;
}

// Builds the full solution record for a known positive fixed point (from the
// solver or from a scan root).
inline EquilibriumSolution solution_at(const Rates& r, const AgeGrid& g, double q0_root) {
    EquilibriumSolution sol;
    sol.igc = igc(r, g);
    sol.kind = EquilibriumKind::positive;
    sol.q0_hat = q0_root;
    const StructureFlags f = r.flags();
    double x1_feedback = 0.0;
    if (f.mu1_z_free) {
        x1_feedback = 0.0;
        sol.residual_fixed_point = std::abs(discounted_reproduction(r, g, q0_root) - 1.0);
    } else {
        x1_feedback = q1_of_q0(r, g, q0_root);
        sol.residual_fixed_point = std::abs(theta(r, g, q0_root) - q0_root);
    }
    sol.phi_hat = equilibrium_profile(r, g, q0_root, x1_feedback);
    sol.q1_hat = f.mu1_z_free ? weighted_total(g, r.omega1, sol.phi_hat) : x1_feedback;
    sol.residual_R = std::abs(net_reproduction(r, g, q0_root, x1_feedback) - 1.0);
    sol.stats = demographic_stats(r, g, sol.phi_hat, q0_root, x1_feedback);
    return sol;
}

// All positive fixed points of Theta found by a sign-change scan over
// (0, Q0_ceiling), each refined by bisection.  Empty when IGC <= 1.
inline std::vector<double> scan_equilibria(const Rates& r, const AgeGrid& g,
                                           std::size_t n_samples = 256) {
    if (n_samples < 10) throw domain_error("scan_equilibria: need at least 10 samples");
    std::vector<double> roots;
    if (igc(r, g) <= 1.0) return roots;

    const StructureFlags f = r.flags();
    if (f.mu1_z_free && f.mu0_z_free && f.beta_z_constant) return roots;

    std::function<double(double)> fn;
    double x_hi = 0.0;
    if (f.mu1_z_free) {
        // Roots of D(x) - 1; push the lattice past the last crossing.
        fn = [&r, &g](double x) { return discounted_reproduction(r, g, x) - 1.0; };
        x_hi = 1.0;
        int grow = 0;
        while (discounted_reproduction(r, g, x_hi) >= 1.0) {
            x_hi *= 2.0;
            if (++grow > 200)
                throw domain_error("scan_equilibria: no upper bound for the lattice");
        }
    } else if (f.mu0_z_free && f.beta_z_constant) {
        EquilibriumSolution sol = solve_equilibrium(r, g);
        if (sol.kind == EquilibriumKind::positive && sol.q0_hat > 0.0)
            roots.push_back(sol.q0_hat);
        return roots;
    } else {
        fn = [&r, &g](double x) { return theta(r, g, x) - x; };
        x_hi = 0.9995 * detail::burden_free_ceiling(r, g);
    }

    const double x_lo = 1e-9 * std::max(1.0, x_hi);
    double px = x_lo, pv = fn(px);
    for (std::size_t i = 1; i < n_samples; ++i) {
        const double x = x_lo + (x_hi - x_lo) * static_cast<double>(i) /
                                    static_cast<double>(n_samples - 1);
        const double v = fn(x);
        if (pv == 0.0)
            roots.push_back(px);
        else if ((pv > 0.0) != (v > 0.0))
            roots.push_back(
                detail::polish_root(fn, bisect_root(fn, px, x, 1e-12), px, x, 1e-11));
        px = x;
        pv = v;
    }
    if (pv == 0.0) roots.push_back(px);
    // merge near-duplicates from lattice points landing on roots
    std::vector<double> merged;
    for (double rt : roots)
        if (merged.empty() || std::abs(rt - merged.back()) > 1e-6 * std::max(1.0, x_hi))
            merged.push_back(rt);
    return merged;
}

// ---------------------------------------------------------------------------
// Uniqueness certificates.

enum class UniquenessVerdict { unique, inconclusive, multiple_found };

inline const char* to_string(UniquenessVerdict v) {
    switch (v) {
        case UniquenessVerdict::unique: return "unique";
        case UniquenessVerdict::multiple_found: return "multiple-found";
        default: return "inconclusive";
    }
}

struct UniquenessCertificate {
    std::string theorem_class = "none";  // recognized structural class
    UniquenessVerdict verdict = UniquenessVerdict::inconclusive;
    double igc = 0.0;
    // linear-boundary class diagnostics (NaN / empty otherwise)
    double lambda_cap = std::numeric_limits<double>::quiet_NaN();
    double e_lambda = std::numeric_limits<double>::quiet_NaN();
    double t_tilde = std::numeric_limits<double>::quiet_NaN();
    double t_tilde_lo = std::numeric_limits<double>::quiet_NaN();
    double t_tilde_hi = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::pair<double, double>> s_curve;      // (x, Q1(x)) samples
    std::vector<std::pair<double, double>> delta_curve;  // (x, Delta(x)) samples
    std::size_t roots_found = 0;
};

namespace detail {

// Delta(x): the sign-equivalent reformulation of Theta(x) - x for the
// separable linear-boundary class.  s = Q1(x); E0, E1 are prefix integrals of
// the two mortality slopes and M2 of the background mortality.
inline double delta_diagnostic(const Rates& r, const AgeGrid& g, double x, double s) {
    std::vector<double> s0(g.n), s1(g.n), m2(g.n);
    for (std::size_t j = 0; j < g.n; ++j) {
        const double a = g.center(j);
        s0[j] = r.mu0.slope(a);
        s1[j] = r.mu1.slope(a);
        m2[j] = r.mu2(a);
    }
    const std::vector<double> e0 = cumulative_boundary(g, s0);
    const std::vector<double> e1 = cumulative_boundary(g, s1);
    const std::vector<double> em = cumulative_boundary(g, m2);
    const std::size_t k_min = g.boundary_index(g.a_min, "delta_diagnostic");
    const double e1_min = e1[k_min];
    std::vector<double> w(g.n);
    for (std::size_t j = 0; j < g.n; ++j) {
        const double half = 0.5 * g.da;
        const double e0c = e0[j] + half * s0[j];
        const double e1c = e1[j] + half * s1[j];
        const double emc = em[j] + half * m2[j];
        // the burden slope is supported in [0, a_min], so e1c - e1_min
        // vanishes above the band and the correction dies out there
        w[j] = std::exp(-emc - x * e0c + s * (e1_min - e1c));
    }
    const double whole = integrate(g, w);
    const double tail = integrate(g, w, g.a_max, g.a1);
    return s * whole - x * tail;
}

}  // namespace detail

inline UniquenessCertificate uniqueness_certificate(const Rates& r, const AgeGrid& g) {
    UniquenessCertificate cert;
    cert.igc = igc(r, g);
    const StructureFlags f = r.flags();

    std::vector<double> roots;
    if (cert.igc > 1.0) roots = scan_equilibria(r, g, 256);
    cert.roots_found = roots.size();
    if (roots.size() >= 2) cert.verdict = UniquenessVerdict::multiple_found;

    const bool separable = f.beta_z_constant && f.mu0_pure_slope && !f.mu1_z_free &&
                           f.etas_identity;
    const bool single_feedback = f.beta_z_constant && (f.mu0_z_free != f.mu1_z_free);
    const bool damped_fertility =
        f.mu0_z_free && f.mu1_z_free && !f.beta_z_constant && f.beta_f_nonincreasing;

    if (separable) {
        cert.theorem_class = "separable-threshold";
        std::vector<double> s0(g.n), s1(g.n), pi2(g.n);
        SurvivalTable bg;  // background-only survival
        {
            std::vector<double> m2(g.n);
            for (std::size_t j = 0; j < g.n; ++j) m2[j] = r.mu2(g.center(j));
            bg.grid = &g;
            bg.mu_cells = m2;
            bg.exponent = cumulative_boundary(g, m2);
        }
        for (std::size_t j = 0; j < g.n; ++j) {
            s0[j] = r.mu0.slope(g.center(j));
            s1[j] = r.mu1.slope(g.center(j));
            pi2[j] = bg.birth_to_center(j);
        }
        const double s0_min_band = integrate(g, s0, 0.0, g.a_min);
        const double s0_full = integrate(g, s0);
        const double eta_bar = s0_min_band / g.a_min;
        const double mu_bar = integrate(g, s1, 0.0, g.a_min) / g.a_min;
        const double num = integrate(g, pi2);
        const double den = integrate(g, pi2, g.a_max, g.a1);
        if (s0_full > 0.0 && mu_bar > 0.0 && den > 0.0) {
            cert.lambda_cap = (s0_min_band / s0_full) * (1.0 + (eta_bar / mu_bar) * num / den);
            cert.e_lambda = std::exp(cert.lambda_cap);
        }
        if (cert.igc > 1.0) {
            cert.t_tilde = detail::burden_free_ceiling(r, g);
            double s0_sup = 0.0, s0_inf = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < g.n; ++j) {
                s0_sup = std::max(s0_sup, s0[j]);
                if (g.center(j) <= g.a_max) s0_inf = std::min(s0_inf, s0[j]);
            }
            if (s0_sup > 0.0) cert.t_tilde_lo = std::log(cert.igc) / (s0_sup * g.a_max);
            if (s0_inf > 0.0 && std::isfinite(s0_inf))
                cert.t_tilde_hi = std::log(cert.igc) / (s0_inf * g.a_min);
            const std::size_t pts = 33;
            for (std::size_t i = 0; i < pts; ++i) {
                const double x = cert.t_tilde * 1.1 * static_cast<double>(i + 1) /
                                 static_cast<double>(pts);
                const double q1 = q1_of_q0(r, g, x);
                cert.s_curve.emplace_back(x, q1);
                cert.delta_curve.emplace_back(x, detail::delta_diagnostic(r, g, x, q1));
            }
        }
        if (cert.verdict != UniquenessVerdict::multiple_found)
            cert.verdict = (cert.igc > 1.0 && std::isfinite(cert.e_lambda) &&
                            cert.e_lambda >= cert.igc)
                               ? UniquenessVerdict::unique
                               : UniquenessVerdict::inconclusive;
    } else if (single_feedback) {
        cert.theorem_class = "single-feedback-monotone";
        if (cert.verdict != UniquenessVerdict::multiple_found && cert.igc > 1.0)
            cert.verdict = UniquenessVerdict::unique;
    } else if (damped_fertility) {
        cert.theorem_class = "damped-fertility";
        if (cert.verdict != UniquenessVerdict::multiple_found && cert.igc > 1.0)
            cert.verdict = UniquenessVerdict::unique;
    }
    return cert;
}

}  // namespace agestruct
