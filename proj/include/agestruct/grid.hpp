#pragma once
// Uniform age grid with cell-centered samples.
//
// Ages live on [0, a1] split into n = a1/da cells; densities are sampled at
// cell centers (j + 1/2) da. The reproductive window [a_min, a_max] marks the
// fertile ages; [0, a_min) are juveniles and (a_max, a1] seniors.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"

namespace agestruct {

struct AgeGrid {
    double a1 = 0.0;     // maximum age
    double da = 0.0;     // cell width (also the time step of the solver)
    double a_min = 0.0;  // first fertile age
    double a_max = 0.0;  // last fertile age
    std::size_t n = 0;   // number of age cells

    AgeGrid() = default;

    AgeGrid(double a1_, double da_, double a_min_, double a_max_)
        : a1(a1_), da(da_), a_min(a_min_), a_max(a_max_) {
        if (!(a1 > 0.0) || !std::isfinite(a1))
            throw domain_error("grid: a1 must be positive and finite");
        if (!(da > 0.0) || !std::isfinite(da))
            throw domain_error("grid: da must be positive and finite");
        if (da > a1) throw domain_error("grid: da exceeds a1");
        double cells = a1 / da;
        n = static_cast<std::size_t>(std::llround(cells));
        if (n == 0 || std::abs(cells - static_cast<double>(n)) > 1e-9 * cells)
            throw domain_error("grid: da must divide a1");
        if (!(a_min >= 0.0) || !(a_max <= a1) || !(a_min < a_max))
            throw domain_error("grid: need 0 <= a_min < a_max <= a1, got [" +
                               std::to_string(a_min) + ", " + std::to_string(a_max) + "]");
    }

    double center(std::size_t j) const { return (static_cast<double>(j) + 0.5) * da; }
    double boundary(std::size_t k) const { return static_cast<double>(k) * da; }

    // True when age a lies inside the reproductive window.  Window edges sit on
    // cell boundaries while samples sit at cell centers, so strict comparisons
    // are unambiguous for sampled ages.
    bool in_window(double a) const { return a > a_min && a < a_max; }

    std::vector<double> centers() const {
        std::vector<double> c(n);
        for (std::size_t j = 0; j < n; ++j) c[j] = center(j);
        return c;
    }

    // Index of the cell boundary at age x; throws if x is not aligned.
    std::size_t boundary_index(double x, const char* who = "grid") const {
        double k = x / da;
        auto idx = static_cast<long long>(std::llround(k));
        if (idx < 0 || static_cast<std::size_t>(idx) > n ||
            std::abs(k - static_cast<double>(idx)) > 1e-9 * (1.0 + std::abs(k)))
            throw domain_error(std::string(who) + ": age " + std::to_string(x) +
                               " is not aligned with the grid");
        return static_cast<std::size_t>(idx);
    }

    bool aligned(double x) const {
        double k = x / da;
        auto idx = static_cast<long long>(std::llround(k));
        return idx >= 0 && static_cast<std::size_t>(idx) <= n &&
               std::abs(k - static_cast<double>(idx)) <= 1e-9 * (1.0 + std::abs(k));
    }
};

}  // namespace agestruct
