#pragma once
// Vital-rate families.
//
// The model couples an age-structured density p(a,t) to itself through
// weighted population sizes Q0 (fertility and adult crowding) and Q1
// (senior burden on juveniles):
//
//   p_t + p_a = -[ mu0(a, eta0(Q0)) + mu1(a, eta1(Q1)) + mu2(a) ] p
//   p(0, t)   = integral beta(a, eta2(Q0)) p(a,t) da  over [a_min, a_max]
//   Q_i(t)    = integral omega_i(a) p(a,t) da          over [0, a1]
//
// Rates are assembled from small analytic families so that scenarios are
// serializable, slopes d(rate)/dz are available in closed form for the
// linearization, and structural facts (separability, monotonicity, which
// rates ignore z) are known to the uniqueness certificates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "errors.hpp"

namespace agestruct {

// ---------------------------------------------------------------------------
// age profiles
// ---------------------------------------------------------------------------

struct AgeProfile {
    enum class Kind {
        zero,
        constant,        // p0
        const_plus_exp,  // p0 + p1 * exp(-p2 * a)
        ramp_exp,        // p0 * (a - p1) * exp(-p2 * (a - p1)) on [p1, p3], else 0
        quad_around,     // p0 * (a - p1)^2
        ramp_down,       // p0 * (p1 - a) on [0, p1], else 0
        window,          // indicator of [p0, p1]
    };
    Kind kind = Kind::zero;
    double p0 = 0.0, p1 = 0.0, p2 = 0.0, p3 = 0.0;

    double operator()(double a) const {
        switch (kind) {
            case Kind::zero: return 0.0;
            case Kind::constant: return p0;
            case Kind::const_plus_exp: return p0 + p1 * std::exp(-p2 * a);
            case Kind::ramp_exp:
                if (a < p1 || a > p3) return 0.0;
                return p0 * (a - p1) * std::exp(-p2 * (a - p1));
            case Kind::quad_around: return p0 * (a - p1) * (a - p1);
            case Kind::ramp_down: return a <= p1 ? p0 * (p1 - a) : 0.0;
            case Kind::window: return (a >= p0 && a <= p1) ? 1.0 : 0.0;
        }
        return 0.0;
    }

    bool is_zero() const { return kind == Kind::zero || (kind == Kind::constant && p0 == 0.0); }
};

// ---------------------------------------------------------------------------
// fertility z-modulation f(z), with f(0) finite and f >= 0
// ---------------------------------------------------------------------------

struct ZMod {
    enum class Kind {
        one,                   // f = 1
        reciprocal,            // f = 1 / (1 + p0 z)
        gauss_bump_reciprocal, // f = (1 + p0 exp(-((z-p1)/p2)^2)) / (1 + p3 z)
    };
    Kind kind = Kind::one;
    double p0 = 0.0, p1 = 0.0, p2 = 1.0, p3 = 0.0;

    double value(double z) const {
        switch (kind) {
            case Kind::one: return 1.0;
            case Kind::reciprocal: return 1.0 / (1.0 + p0 * z);
            case Kind::gauss_bump_reciprocal: {
                double u = (z - p1) / p2;
                return (1.0 + p0 * std::exp(-u * u)) / (1.0 + p3 * z);
            }
        }
        return 1.0;
    }

    double slope(double z) const {
        switch (kind) {
            case Kind::one: return 0.0;
            case Kind::reciprocal: {
                double d = 1.0 + p0 * z;
                return -p0 / (d * d);
            }
            case Kind::gauss_bump_reciprocal: {
                double u = (z - p1) / p2;
                double g = p0 * std::exp(-u * u);
                double d = 1.0 + p3 * z;
                return (-2.0 * g * u / p2 * d - p3 * (1.0 + g)) / (d * d);
            }
        }
        return 0.0;
    }

    bool nonincreasing() const {
        return kind == Kind::one || kind == Kind::reciprocal ||
               (kind == Kind::gauss_bump_reciprocal && p0 == 0.0);
    }
};

// ---------------------------------------------------------------------------
// feedback maps eta_i (monotone nondecreasing, eta(0) = 0, odd-extended)
// ---------------------------------------------------------------------------

struct Feedback {
    enum class Kind { identity, scale };  // scale: eta(z) = p0 * z
    Kind kind = Kind::identity;
    double p0 = 1.0;

    double operator()(double z) const { return kind == Kind::identity ? z : p0 * z; }
    double slope(double) const { return kind == Kind::identity ? 1.0 : p0; }
    bool is_identity() const { return kind == Kind::identity || p0 == 1.0; }
};

// ---------------------------------------------------------------------------
// assembled rates
// ---------------------------------------------------------------------------

struct StructureFlags {
    bool beta_z_constant = false;       // beta ignores z
    bool beta_f_nonincreasing = false;  // modulation f' <= 0 on z >= 0
    bool mu0_z_free = false;
    bool mu1_z_free = false;
    bool mu0_pure_slope = false;  // mu0(a,z) = s0(a) z with no age-only part
    bool etas_identity = false;
};

// Mortality components are affine in the feedback value v: base(a) + slope(a)*v.
// This covers every built-in family, keeps mu1 odd in v automatically, and
// provides the slopes the linearization needs in closed form.
struct MortalityPart {
    AgeProfile base;
    AgeProfile slope;

    double operator()(double a, double v) const { return base(a) + slope(a) * v; }
    double dv(double a) const { return slope(a); }
    bool z_free() const { return slope.is_zero(); }
};

struct Rates {
    // fertility beta(a, v) = beta_age(a) * beta_mod(v), zero outside [a_min, a_max]
    AgeProfile beta_age;
    ZMod beta_mod;
    MortalityPart mu0;  // adult / crowding mortality, argument eta0(Q0)
    MortalityPart mu1;  // juvenile burden mortality, argument eta1(Q1)
    AgeProfile mu2;     // background mortality
    Feedback eta0, eta1, eta2;
    AgeProfile omega0;  // weight of Q0 (defaults to the whole age range)
    AgeProfile omega1;  // weight of Q1 (defaults to the senior window)

    double beta(double a, double v) const { return beta_age(a) * beta_mod.value(v); }
    double dbeta_dv(double a, double v) const { return beta_age(a) * beta_mod.slope(v); }

    StructureFlags flags() const {
        StructureFlags s;
        s.beta_z_constant = beta_mod.kind == ZMod::Kind::one;
        s.beta_f_nonincreasing = beta_mod.nonincreasing();
        s.mu0_z_free = mu0.z_free();
        s.mu1_z_free = mu1.z_free();
        s.mu0_pure_slope = mu0.base.is_zero() && !mu0.slope.is_zero();
        s.etas_identity = eta0.is_identity() && eta1.is_identity() && eta2.is_identity();
        return s;
    }
};

inline AgeProfile window_profile(double lo, double hi) {
    AgeProfile p;
    p.kind = AgeProfile::Kind::window;
    p.p0 = lo;
    p.p1 = hi;
    return p;
}

}  // namespace agestruct
