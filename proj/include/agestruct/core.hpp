#pragma once
// Survival tables and reproduction numbers with feedback sizes frozen.
//
// Everything here evaluates the population-free building blocks: freeze the
// weighted sizes (x0, x1), tabulate total mortality on the grid, and expose
//   Pi(b, a)  survival from age b to age a,
//   R(x0,x1)  expected lifetime offspring of a newborn (net reproduction),
//   igc       R at zero population, the intrinsic growth constant.
//
// Survival exponents are plain prefix sums over cells, so the cocycle
// property Pi(b,a) Pi(a,c) = Pi(b,c) holds to rounding error by construction.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "grid.hpp"
#include "quadrature.hpp"
#include "rates.hpp"

namespace agestruct {

struct SurvivalTable {
    const AgeGrid* grid = nullptr;
    std::vector<double> mu_cells;   // total mortality at cell centers
    std::vector<double> exponent;   // cumulative mortality at cell boundaries

    // survival from boundary age b to boundary age a (b <= a, grid-aligned)
    double operator()(double b, double a) const {
        if (b > a) throw domain_error("survival: b > a");
        std::size_t kb = grid->boundary_index(b, "survival");
        std::size_t ka = grid->boundary_index(a, "survival");
        return std::exp(-(exponent[ka] - exponent[kb]));
    }

    // survival from birth to the center of cell j
    double birth_to_center(std::size_t j) const {
        return std::exp(-(exponent[j] + 0.5 * grid->da * mu_cells[j]));
    }

    std::vector<double> birth_to_centers() const {
        std::vector<double> v(grid->n);
        for (std::size_t j = 0; j < grid->n; ++j) v[j] = birth_to_center(j);
        return v;
    }
};

// Total mortality at cell centers with feedback sizes frozen at (x0, x1).
inline std::vector<double> mortality_cells(const Rates& r, const AgeGrid& g, double x0,
                                           double x1) {
    const double v0 = r.eta0(x0), v1 = r.eta1(x1);
    std::vector<double> mu(g.n);
    for (std::size_t j = 0; j < g.n; ++j) {
        double a = g.center(j);
        mu[j] = r.mu0(a, v0) + r.mu1(a, v1) + r.mu2(a);
    }
    return mu;
}

inline SurvivalTable make_survival(const Rates& r, const AgeGrid& g, double x0, double x1) {
    SurvivalTable s;
    s.grid = &g;
    s.mu_cells = mortality_cells(r, g, x0, x1);
    s.exponent = cumulative_boundary(g, s.mu_cells);
    return s;
}

inline double survival_probability(const Rates& r, const AgeGrid& g, double b, double a,
                                   double x0, double x1) {
    return make_survival(r, g, x0, x1)(b, a);
}

// Weighted population size: integral of weight(a) p(a) over the whole range.
inline double weighted_total(const AgeGrid& g, const AgeProfile& weight,
                             const std::vector<double>& p) {
    std::vector<double> v(g.n);
    for (std::size_t j = 0; j < g.n; ++j) v[j] = weight(g.center(j)) * p[j];
    return integrate(g, v);
}

// Net reproduction with sizes frozen at (x0, x1):
//   R(x0, x1) = integral over [a_min, a_max] of beta(a, eta2(x0)) Pi(0, a; x0, x1) da.
// Fertility counts only inside the grid's reproductive window, so narrowing the
// window (as a window sweep does) removes those ages' contribution even when
// the profile itself extends further.
inline double net_reproduction(const Rates& r, const AgeGrid& g, double x0, double x1) {
    SurvivalTable s = make_survival(r, g, x0, x1);
    const double v2 = r.eta2(x0);
    std::vector<double> v(g.n, 0.0);
    for (std::size_t j = 0; j < g.n; ++j) {
        double a = g.center(j);
        if (g.in_window(a)) v[j] = r.beta(a, v2) * s.birth_to_center(j);
    }
    return integrate(g, v);
}

inline double igc(const Rates& r, const AgeGrid& g) { return net_reproduction(r, g, 0.0, 0.0); }

// Birth output of a density: F(p) = integral over [a_min, a_max] of
// beta(a, eta2(Q0)) p(a) da, with Q0 taken from p itself.
inline double birth_functional(const Rates& r, const AgeGrid& g, const std::vector<double>& p) {
    const double q0 = weighted_total(g, r.omega0, p);
    const double v2 = r.eta2(q0);
    std::vector<double> v(g.n, 0.0);
    for (std::size_t j = 0; j < g.n; ++j) {
        double a = g.center(j);
        if (g.in_window(a)) v[j] = r.beta(a, v2) * p[j];
    }
    return integrate(g, v);
}

// Aging output of a density: G(p)(a) = -(mu0 + mu1 + mu2)(a) p(a), with the
// feedback sizes taken from p itself.  Entrywise <= 0 whenever p >= 0.
inline std::vector<double> aging_functional(const Rates& r, const AgeGrid& g,
                                            const std::vector<double>& p) {
    const double q0 = weighted_total(g, r.omega0, p);
    const double q1 = weighted_total(g, r.omega1, p);
    std::vector<double> mu = mortality_cells(r, g, q0, q1);
    std::vector<double> out(g.n);
    for (std::size_t j = 0; j < g.n; ++j) out[j] = -mu[j] * p[j];
    return out;
}

// ---------------------------------------------------------------------------
// Structural hypothesis checks and the growth constant.

struct HypothesisWitness {
    std::string condition;  // which check produced this sample
    double age = 0.0;
    double size = 0.0;   // feedback size at the witness
    double value = 0.0;  // offending value
};

struct HypothesisReport {
    bool h1 = true;  // sign/support structure of the rates and feedback maps
    bool h2 = true;  // discounted reproduction drops below 1 within the bracket
    bool h6 = true;  // fertility bounded over the sampled sizes
    bool h7 = true;  // monotone feedback directions (envelopes available)
    std::vector<HypothesisWitness> witnesses;
    double omega_bound = 0.0;  // |F| + |G| growth constant, 1/year
    double q0_bracket = 0.0;
    double beta_sup = 0.0;
    double mu_sup = 0.0;

    bool all_pass() const { return h1 && h2 && h6 && h7; }
};

namespace detail {
// {0} followed by a log-spaced ladder up to cap.
inline std::vector<double> size_lattice(double cap, std::size_t points = 25) {
    std::vector<double> z{0.0};
    if (cap <= 0.0) return z;
    const double lo = std::min(1.0, cap / 1e6);
    for (std::size_t i = 0; i < points; ++i) {
        double t = static_cast<double>(i) / static_cast<double>(points - 1);
        z.push_back(lo * std::pow(cap / lo, t));
    }
    return z;
}
}  // namespace detail

// Supremum-based growth constant: omega = sup beta + sup(mu0+mu1+mu2), the
// suprema taken over the grid and feedback sizes in [0, cap0] x [0, cap1].
inline double growth_constant(const Rates& r, const AgeGrid& g, double cap0, double cap1) {
    const std::vector<double> z0 = detail::size_lattice(cap0);
    const std::vector<double> z1 = detail::size_lattice(cap1);
    double beta_sup = 0.0, mu_sup = 0.0;
    for (std::size_t j = 0; j < g.n; ++j) {
        const double a = g.center(j);
        double b = 0.0, m0 = 0.0, m1 = 0.0;
        for (double z : z0) {
            b = std::max(b, r.beta(a, r.eta2(z)));
            m0 = std::max(m0, r.mu0(a, r.eta0(z)));
        }
        for (double z : z1) m1 = std::max(m1, r.mu1(a, r.eta1(z)));
        beta_sup = std::max(beta_sup, b);
        mu_sup = std::max(mu_sup, m0 + m1 + r.mu2(a));
    }
    return beta_sup + mu_sup;
}

// Samples the structural hypotheses on the grid and a log-spaced size lattice
// up to q0_bracket.  Failures are reported with witnesses, never thrown.
inline HypothesisReport validate_hypotheses(const Rates& r, const AgeGrid& g,
                                            double q0_bracket) {
    HypothesisReport rep;
    rep.q0_bracket = q0_bracket;
    const std::vector<double> zs = detail::size_lattice(q0_bracket);

    auto fail = [&rep](bool& flag, const char* cond, double a, double z, double val) {
        flag = false;
        rep.witnesses.push_back({cond, a, z, val});
    };

    // H.1 part 1: all rates nonnegative at sampled (a, z).
    for (std::size_t j = 0; j < g.n; ++j) {
        const double a = g.center(j);
        for (double z : zs) {
            if (r.beta(a, r.eta2(z)) < 0.0) fail(rep.h1, "beta >= 0", a, z, r.beta(a, r.eta2(z)));
            if (r.mu0(a, r.eta0(z)) < 0.0) fail(rep.h1, "mu0 >= 0", a, z, r.mu0(a, r.eta0(z)));
            if (r.mu1(a, r.eta1(z)) < 0.0) fail(rep.h1, "mu1 >= 0", a, z, r.mu1(a, r.eta1(z)));
        }
        if (r.mu2(a) < 0.0) fail(rep.h1, "mu2 >= 0", a, 0.0, r.mu2(a));
        // H.1 part 2: the juvenile-burden mortality vanishes above a_min.
        if (a > g.a_min && r.mu1(a, r.eta1(std::max(1.0, q0_bracket))) != 0.0)
            fail(rep.h1, "mu1 support in [0, a_min]", a, std::max(1.0, q0_bracket),
                 r.mu1(a, r.eta1(std::max(1.0, q0_bracket))));
    }
    // H.1 part 3: feedback maps fix 0 and do not decrease.
    for (const Feedback* eta : {&r.eta0, &r.eta1, &r.eta2}) {
        if ((*eta)(0.0) != 0.0) fail(rep.h1, "eta(0) = 0", 0.0, 0.0, (*eta)(0.0));
        double prev = (*eta)(0.0);
        for (double z : zs) {
            double v = (*eta)(z);
            if (v < prev) fail(rep.h1, "eta nondecreasing", 0.0, z, v);
            prev = v;
        }
    }

    // H.2: the discounted reproduction number R(x, 0) drops below 1 in bracket.
    {
        bool dropped = false;
        double dmin = std::numeric_limits<double>::infinity(), zmin = 0.0;
        for (double z : zs) {
            double d = net_reproduction(r, g, z, 0.0);
            if (d < dmin) { dmin = d; zmin = z; }
            if (d < 1.0) { dropped = true; break; }
        }
        if (!dropped) fail(rep.h2, "R(x,0) < 1 within bracket", 0.0, zmin, dmin);
    }

    // H.6 + growth constant: suprema of the rates over the sampled sizes.
    {
        const std::vector<double> z1 = detail::size_lattice(q0_bracket);
        double beta_sup = 0.0, mu_sup = 0.0;
        for (std::size_t j = 0; j < g.n; ++j) {
            const double a = g.center(j);
            double b = 0.0, m0 = 0.0, m1 = 0.0;
            for (double z : zs) {
                b = std::max(b, r.beta(a, r.eta2(z)));
                m0 = std::max(m0, r.mu0(a, r.eta0(z)));
            }
            for (double z : z1) m1 = std::max(m1, r.mu1(a, r.eta1(z)));
            beta_sup = std::max(beta_sup, b);
            mu_sup = std::max(mu_sup, m0 + m1 + r.mu2(a));
        }
        rep.beta_sup = beta_sup;
        rep.mu_sup = mu_sup;
        rep.omega_bound = beta_sup + mu_sup;
        if (!std::isfinite(beta_sup)) fail(rep.h6, "fertility bounded", 0.0, 0.0, beta_sup);
    }

    // H.7: monotone feedback directions so comparison envelopes exist.
    if (!r.beta_mod.nonincreasing())
        fail(rep.h7, "fertility modulation nonincreasing", 0.0, 0.0, 0.0);
    for (std::size_t j = 0; j < g.n && rep.h7; ++j) {
        const double a = g.center(j);
        if (r.mu0.dv(a) < 0.0) fail(rep.h7, "mu0 nondecreasing in size", a, 0.0, r.mu0.dv(a));
        if (r.mu1.dv(a) < 0.0) fail(rep.h7, "mu1 nondecreasing in size", a, 0.0, r.mu1.dv(a));
    }

    return rep;
}

}  // namespace agestruct
