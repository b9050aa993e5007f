#pragma once
// Linearization at an equilibrium and the characteristic function K(lambda).
//
// The linearized boundary dynamics reduce to a scalar equation K(lambda) = 1
// on the real axis.  K is assembled from the survival kernel at the
// equilibrium, the rate slopes in the feedback value, and resolvent weights
// H0, H1 that solve a 2x2 system coupling the two population sizes.  The
// useful scalar is DR = K(0) - 1, the feedback derivative of net
// reproduction at the equilibrium: DR > 0 means a real unstable root exists;
// DR < 0 supports stability when the sign and ordering side conditions on
// the rate slopes (checked by sampling) hold.

#include <cmath>
#include <string>
#include <vector>

#include "core.hpp"
#include "equilibrium.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "quadrature.hpp"
#include "rates.hpp"

namespace agestruct {

struct LinearizedOperator {
    const Rates* rates = nullptr;
    const AgeGrid* grid = nullptr;
    EquilibriumKind kind = EquilibriumKind::trivial;
    double q0 = 0.0, q1 = 0.0;                       // weighted sizes
    double eta0p = 1.0, eta1p = 1.0, eta2p = 1.0;    // feedback derivatives
    std::vector<double> pi;                          // Pi(0, a_j) at the equilibrium
    std::vector<double> d0, d1;                      // d mu_i / dv at cell centers
    std::vector<double> beta_row;                    // beta(a, eta2(q0))
    std::vector<double> dbeta_row;                   // d beta / dv at cell centers
    std::vector<double> w0_row, w1_row;              // weight profiles
    double W0 = 0.0, W1 = 0.0;                       // integrals of w_i * Pi
    std::vector<double> phi;                         // equilibrium profile
};

inline LinearizedOperator linearize_at(const Rates& r, const AgeGrid& g,
                                       const EquilibriumSolution& eq) {
    LinearizedOperator op;
    op.rates = &r;
    op.grid = &g;
    op.kind = eq.kind;
    op.q0 = eq.q0_hat;
    op.q1 = eq.q1_hat;
    op.eta0p = r.eta0.slope(eq.q0_hat);
    op.eta1p = r.eta1.slope(eq.q1_hat);
    op.eta2p = r.eta2.slope(eq.q0_hat);

    SurvivalTable s = make_survival(r, g, eq.q0_hat, eq.q1_hat);
    op.pi = s.birth_to_centers();
    const double v2 = r.eta2(eq.q0_hat);
    op.d0.resize(g.n);
    op.d1.resize(g.n);
    op.beta_row.resize(g.n);
    op.dbeta_row.resize(g.n);
    op.w0_row.resize(g.n);
    op.w1_row.resize(g.n);
    std::vector<double> v0(g.n), v1(g.n);
    for (std::size_t j = 0; j < g.n; ++j) {
        const double a = g.center(j);
        const bool fertile = g.in_window(a);
        op.d0[j] = r.mu0.dv(a);
        op.d1[j] = r.mu1.dv(a);
        op.beta_row[j] = fertile ? r.beta(a, v2) : 0.0;
        op.dbeta_row[j] = fertile ? r.dbeta_dv(a, v2) : 0.0;
        op.w0_row[j] = r.omega0(a);
        op.w1_row[j] = r.omega1(a);
        v0[j] = op.w0_row[j] * op.pi[j];
        v1[j] = op.w1_row[j] * op.pi[j];
    }
    op.W0 = integrate(g, v0);
    op.W1 = integrate(g, v1);
    op.phi = eq.phi_hat;
    return op;
}

namespace detail {

// Discounted inner integrals at cell centers:
//   out[j] = e^{-lambda a_j} int_0^{a_j} e^{lambda b} d(b) db
//          = int_0^{a_j} e^{-lambda (a_j - b)} d(b) db,
// accumulated as an exponentially weighted trailing sum with the half-cell
// convention of the survival table.  Keeping the discount inside the
// recurrence avoids the e^{lambda a} overflow a raw prefix would hit for
// lambda a_1 beyond ~700.
inline std::vector<double> discounted_prefix(const AgeGrid& g, const std::vector<double>& d,
                                             double lambda) {
    std::vector<double> out(g.n);
    const double fade = std::exp(-lambda * g.da);
    double trail = 0.0;  // sum of e^{-lambda (a_j - a_i)} d_i da over cells i < j
    for (std::size_t j = 0; j < g.n; ++j) {
        out[j] = trail + 0.5 * d[j] * g.da;
        trail = (trail + d[j] * g.da) * fade;
    }
    return out;
}

}  // namespace detail

// K(lambda) for real lambda.  At the trivial equilibrium all H terms vanish
// and K reduces to the discounted fertility integral.
inline double characteristic_K(const LinearizedOperator& op, double lambda) {
    const AgeGrid& g = *op.grid;
    std::vector<double> pil(g.n);
    for (std::size_t j = 0; j < g.n; ++j)
        pil[j] = std::exp(-lambda * g.center(j)) * op.pi[j];

    std::vector<double> tmp(g.n);
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t j = 0; j < g.n; ++j) tmp[j] = a[j] * b[j];
        return integrate(g, tmp);
    };
    auto dot3 = [&](const std::vector<double>& a, const std::vector<double>& b,
                    const std::vector<double>& c) {
        for (std::size_t j = 0; j < g.n; ++j) tmp[j] = a[j] * b[j] * c[j];
        return integrate(g, tmp);
    };

    const double base = dot(op.beta_row, pil);
    if (op.kind == EquilibriumKind::trivial) return base;

    // D_i[j] = e^{-lambda a_j} * int_0^{a_j} e^{lambda b} d_i(b) db, so every
    // product below pairs the undiscounted survival row with a bounded factor.
    const std::vector<double> D0 = detail::discounted_prefix(g, op.d0, lambda);
    const std::vector<double> D1 = detail::discounted_prefix(g, op.d1, lambda);

    const double I00 = op.q0 * op.eta0p / op.W0 * dot3(op.w0_row, op.pi, D0);
    const double I01 = op.q0 * op.eta1p / op.W0 * dot3(op.w0_row, op.pi, D1);
    const double I10 = op.q1 * op.eta0p / op.W1 * dot3(op.w1_row, op.pi, D0);
    const double I11 = op.q1 * op.eta1p / op.W1 * dot3(op.w1_row, op.pi, D1);
    const double delta = (1.0 + I00) * (1.0 + I11) - I01 * I10;
    if (std::abs(delta) < 1e-12)
        throw domain_error("characteristic_K: singular resolvent denominator at lambda = " +
                           std::to_string(lambda));

    const double F0 = dot(op.w0_row, pil) / op.W0;
    const double F1 = dot(op.w1_row, pil) / op.W1;
    const double H0 = (op.q0 * (1.0 + I11) * F0 - op.q1 * I01 * F1) / delta;
    const double H1 = (-op.q0 * I10 * F0 + op.q1 * (1.0 + I00) * F1) / delta;

    return base - H0 * op.eta0p * dot3(op.beta_row, op.pi, D0) -
           H1 * op.eta1p * dot3(op.beta_row, op.pi, D1) +
           H0 * op.eta2p * dot(op.dbeta_row, op.pi);
}

// DR: the feedback derivative of net reproduction at the equilibrium,
// equal to K(0) - 1.  At the trivial equilibrium this is IGC - 1.
inline double dR_at(const LinearizedOperator& op) {
    return characteristic_K(op, 0.0) - 1.0;
}

// ---------------------------------------------------------------------------
// Side conditions for the stability theorem, checked by sampling.

// Sign conditions on the rate slopes: fertility must not fall with the
// population and mortality must not rise with it (positive-feedback
// structure).  Sampled on every `stride`-th cell.
inline bool slope_sign_check(const LinearizedOperator& op, std::size_t stride = 4) {
    const AgeGrid& g = *op.grid;
    for (std::size_t j = 0; j < g.n; j += stride) {
        const double a = g.center(j);
        if (a >= g.a_min && a <= g.a_max && op.eta2p * op.dbeta_row[j] < 0.0) return false;
        if (op.eta0p * op.d0[j] > 0.0) return false;
        if (op.eta1p * op.d1[j] > 0.0) return false;
    }
    return true;
}

// Ordering conditions coupling the two mortality slopes and the two weights,
// sampled on the (age, age) product lattice with the given stride.
inline bool slope_ordering_check(const LinearizedOperator& op, std::size_t stride = 4) {
    const AgeGrid& g = *op.grid;
    const std::vector<double> S0 = detail::discounted_prefix(g, op.d0, 0.0);
    const std::vector<double> S1 = detail::discounted_prefix(g, op.d1, 0.0);
    for (std::size_t jb = 0; jb < g.n; jb += stride) {
        for (std::size_t js = 0; js < g.n; js += stride) {
            const double cross = op.eta0p * op.eta1p *
                                 (op.d0[jb] * op.d1[js] - op.d1[jb] * op.d0[js]);
            if (jb <= js && cross > 0.0) return false;
            const double wp = op.w1_row[jb] * op.w0_row[js] - op.w0_row[jb] * op.w1_row[js];
            if (wp * op.eta1p * S1[jb] < 0.0) return false;
            if (-wp * op.eta0p * S0[jb] < 0.0) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Classification.

enum class Classification { stable, unstable, theorem_not_applicable };

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::stable: return "stable";
        case Classification::unstable: return "unstable";
        default: return "theorem-not-applicable";
    }
}

struct StabilityVerdict {
    EquilibriumKind kind = EquilibriumKind::trivial;
    double dr = 0.0;
    bool h4_checked = false, h4_pass = false;
    bool h5_checked = false, h5_pass = false;
    Classification classification = Classification::theorem_not_applicable;
    std::vector<double> real_roots;  // roots of K(lambda) = 1 on the scan range
};

// All real roots of K(lambda) - 1 on [lo, hi]: lattice scan + bisection.
// Strongly negative lambda is numerically hostile: e^{-lambda a} reaches
// e^{40} at lambda = -0.5 on an 80-unit age span and the resolvent assembly
// cancels to noise, producing spurious sign changes.  Keep lambda_lo above
// about -0.25 unless the grid is short.
inline std::vector<double> find_real_roots(const LinearizedOperator& op, double lambda_lo,
                                           double lambda_hi, std::size_t n_samples = 1001) {
    if (!(lambda_lo < lambda_hi)) throw domain_error("find_real_roots: empty interval");
    std::vector<double> roots;
    auto f = [&](double lam) { return characteristic_K(op, lam) - 1.0; };
    double px = lambda_lo, pv = f(px);
    for (std::size_t i = 1; i < n_samples; ++i) {
        const double x = lambda_lo + (lambda_hi - lambda_lo) * static_cast<double>(i) /
                                         static_cast<double>(n_samples - 1);
        const double v = f(x);
        if (pv == 0.0)
            roots.push_back(px);
        else if ((pv > 0.0) != (v > 0.0))
            roots.push_back(bisect_root(f, px, x, 1e-10));
        px = x;
        pv = v;
    }
    if (pv == 0.0) roots.push_back(px);
    return roots;
}

inline StabilityVerdict classify_equilibrium(const LinearizedOperator& op,
                                             const EquilibriumSolution& eq, double tol = 1e-9,
                                             std::size_t stride = 4) {
    StabilityVerdict v;
    v.kind = eq.kind;
    v.dr = dR_at(op);
    if (eq.kind == EquilibriumKind::trivial) {
        v.classification =
            eq.igc <= 1.0 ? Classification::stable : Classification::unstable;
    } else if (v.dr > tol) {
        v.classification = Classification::unstable;
    } else if (v.dr < -tol) {
        v.h4_checked = true;
        v.h4_pass = slope_sign_check(op, stride);
        if (v.h4_pass) {
            v.h5_checked = true;
            v.h5_pass = slope_ordering_check(op, stride);
        }
        v.classification = (v.h4_pass && v.h5_pass) ? Classification::stable
                                                    : Classification::theorem_not_applicable;
    } else {
        v.classification = Classification::theorem_not_applicable;
    }
    v.real_roots = find_real_roots(op, -0.2, 0.5, 1001);
    return v;
}

}  // namespace agestruct
