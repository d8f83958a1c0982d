#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "sid/common.hpp"

namespace sid {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
    bool converged = true;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1]; column 0 node, 1 Gauss weight,
// 2 Kronrod weight.
inline constexpr double gk15[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529},
};

template <class F>
inline std::pair<double, double> gk15_panel(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double m = 0.5 * (b - a);
    double y0 = f(c);
    double g = gk15[0][1] * y0;
    double k = gk15[0][2] * y0;
    for (int i = 1; i < 8; ++i) {
        double dx = m * gk15[i][0];
        double yi = f(c + dx) + f(c - dx);
        g += gk15[i][1] * yi;
        k += gk15[i][2] * yi;
    }
    g *= m;
    k *= m;
    double err = std::abs(k - g);
    err = 200.0 * err * std::sqrt(std::max(err, 0.0));
    return {k, std::min(err, std::abs(k - g) * 200.0 + 1e-300)};
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b].
/// Bisects the interval with the worst local error estimate until the
/// tolerance abs_tol + rel_tol*|I| is met or max_intervals is exhausted.
template <class F>
inline QuadResult integrate(const F& f, double a, double b, double abs_tol = 1e-9,
                            double rel_tol = 1e-7, int max_intervals = 4000) {
    QuadResult out;
    if (a == b) return out;
    struct Panel {
        double a, b, value, error;
    };
    auto [v0, e0] = detail::gk15_panel(f, a, b);
    std::vector<Panel> panels{{a, b, v0, e0}};
    out.intervals = 1;
    for (;;) {
        double total = 0.0, err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < panels.size(); ++i) {
            total += panels[i].value;
            err += panels[i].error;
            if (panels[i].error > panels[worst].error) worst = i;
        }
        out.value = total;
        out.error = err;
        if (err <= abs_tol + rel_tol * std::abs(total)) return out;
        if (out.intervals >= max_intervals) {
            out.converged = false;
            return out;
        }
        Panel p = panels[worst];
        double mid = 0.5 * (p.a + p.b);
        auto [vl, el] = detail::gk15_panel(f, p.a, mid);
        auto [vr, er] = detail::gk15_panel(f, mid, p.b);
        panels[worst] = {p.a, mid, vl, el};
        panels.push_back({mid, p.b, vr, er});
        ++out.intervals;
    }
}

template <class F>
inline double integrate_or_throw(const F& f, double a, double b, double abs_tol = 1e-9,
                                 double rel_tol = 1e-7) {
    QuadResult r = integrate(f, a, b, abs_tol, rel_tol);
    if (!r.converged)
        throw NumericError("quadrature did not converge on [" + std::to_string(a) + ", " +
                           std::to_string(b) + "]: error estimate " + std::to_string(r.error) +
                           " after " + std::to_string(r.intervals) + " intervals");
    return r.value;
}

}  // namespace sid
