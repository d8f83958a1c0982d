#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sid/quadrature.hpp"
#include "sid/sde.hpp"

namespace sid {

/// Correction term xi(t) = -exp(-A(t)) Gamma(t0) V0 carried by the averaging.
inline Vec averaging_xi(const DerivedScales& sc, double t, const Vec& v0) {
    return Vec(-sc.exp_neg_A(t) * sc.Gamma(sc.t0()) * v0);
}

/// Total mass of the averaging measure mu_t: the Dirac atom exp(-A(t)) plus
/// the density a(u) exp(A(u) - A(t)) on [t0, t]. Equals 1 up to quadrature.
inline double averaging_measure_mass(const DerivedScales& sc, double t) {
    const double at = sc.A(t);
    double closure = integrate_or_throw(
        [&](double u) { return sc.a(u) * std::exp(sc.A(u) - at); }, sc.t0(), t);
    return sc.exp_neg_A(t) + closure;
}

/// Reparametrize a first-order trajectory from s-time to t-time:
/// Y(t_k) = Z(theta(t_k)), piecewise-linear in s between grid nodes.
inline TrajectoryFirstOrder time_rescale(const TrajectoryFirstOrder& z,
                                         const DerivedScales& scales, const TimeGrid& grid_t,
                                         const CompositeProblem& problem) {
    const double s_lo = z.grid.t_start;
    const double s_hi = z.grid.node(z.last_valid);
    const double hs = z.grid.h;

    TrajectoryFirstOrder out;
    out.grid = grid_t;
    const std::size_t n = grid_t.n_nodes();
    out.states.reserve(n);
    out.f_gap.reserve(n);
    out.grad_norm.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = scales.theta(grid_t.node(k));
        if (s < s_lo - 1e-9 || s > s_hi * (1.0 + 1e-12) + 1e-9)
            throw std::domain_error("time_rescale: theta(t) outside covered s-range");
        double pos = (s - s_lo) / hs;
        std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(std::max(pos, 0.0)),
                                              z.last_valid == 0 ? 0 : z.last_valid - 1);
        double w = std::clamp(pos - static_cast<double>(i), 0.0, 1.0);
        Vec y = (1.0 - w) * z.states[i] + w * z.states[std::min(i + 1, z.last_valid)];
        out.states.push_back(y);
        out.f_gap.push_back(problem.gap(y));
        out.grad_norm.push_back(problem.drift(y).norm());
        out.last_valid = k;
    }
    return out;
}

/// Averaging step of the construction: integrate dX = a(t)(Y - X) dt from
/// X(t0) = Y(t0) - Gamma(t0) V0 and recover V = (Y - X)/Gamma. The recursive
/// form is O(n); the quadrature form of the same measure is kept as a test
/// oracle only.
inline TrajectorySecondOrder average_trajectory(const TrajectoryFirstOrder& y,
                                                const DerivedScales& scales, const Vec& v0,
                                                const CompositeProblem& problem) {
    const std::size_t n = y.n_nodes();
    const double h = y.grid.h;
    TrajectorySecondOrder out;
    out.grid = y.grid;
    out.X.reserve(n);
    out.V.reserve(n);
    out.f_gap.reserve(n);
    out.grad_norm.reserve(n);

    Vec x = y.states[0] - scales.Gamma(scales.t0()) * v0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = y.grid.node(k);
        const double G = scales.Gamma(t);
        if (!(G > 0.0)) throw ConfigError("average_trajectory: Gamma(t) must be positive");
        Vec v = (y.states[k] - x) / G;
        out.X.push_back(x);
        out.V.push_back(v);
        out.f_gap.push_back(problem.gap(x));
        out.grad_norm.push_back(y.grad_norm[k]);  // drift evaluated at Y = X + Gamma V
        out.last_valid = k;
        if (k + 1 < n) x += h * scales.a(t) * (y.states[k] - x);
    }
    return out;
}

struct EquivalenceReport {
    std::vector<double> hs;
    std::vector<double> sup_discrepancy;  // mean over paths of sup_k ||X_a - X_b||
    double fitted_order = 0.0;
    bool identically_zero = false;
};

/// Runs (a) the direct inertial scheme and (b) the scaled first-order scheme
/// followed by averaging, with the same Brownian increments feeding both
/// (s-side increments dB_k = sqrt(Gamma(t_k)) dW_k), over halved step sizes.
inline EquivalenceReport transform_equivalence_check(const CompositeProblem& problem,
                                                     const DiffusionSchedule& sigma,
                                                     const DerivedScales& scales, double t_end,
                                                     double h0, int n_halvings, const Vec& x0,
                                                     const Vec& v0, uint64_t seed,
                                                     int n_paths = 8) {
    EquivalenceReport rep;
    // s-side envelope sigma_s(s) = sigma_inf(theta^{-1}(s)) sqrt(Gamma(theta^{-1}(s))):
    // the scaled integrator then applies sqrt(Gamma(t)) on top, so the noise
    // entering (b) per step is Gamma(t_k) sigma_inf(t_k) dW_k.
    const DiffusionSchedule sigma_s = DiffusionSchedule::callable(
        [&scales, &sigma](double s) {
            const double t = scales.theta_inv(s);
            return sigma.sigma_inf(t) * std::sqrt(scales.Gamma(t));
        },
        sigma.sigma_star() * std::sqrt(scales.Gamma(scales.t0()) + 1.0));

    const double t0 = scales.t0();
    for (int i = 0; i < n_halvings; ++i) {
        const double h = h0 / static_cast<double>(1 << i);
        TimeGrid grid(t0, t_end, h);
        double acc = 0.0;
        for (int p = 0; p < n_paths; ++p) {
            BrownianPath path(problem.dim(), grid,
                              path_seed(seed, static_cast<uint64_t>(i) * 7919 + p));
            InertialOptions ia;
            ia.x0 = x0;
            ia.v0 = v0;
            TrajectorySecondOrder direct = simulate_inertial(problem, sigma, scales, grid, path, ia);

            FirstOrderOptions fo;
            fo.z0 = x0 + scales.Gamma(t0) * v0;
            TrajectoryFirstOrder y =
                simulate_scaled_first_order(problem, sigma_s, scales, grid, path, fo);
            TrajectorySecondOrder averaged = average_trajectory(y, scales, v0, problem);

            if (direct.aborted || y.aborted)
                throw NumericError("transform_equivalence_check: trajectory aborted");
            double sup = 0.0;
            for (std::size_t k = 0; k < direct.n_nodes(); ++k)
                sup = std::max(sup, (direct.X[k] - averaged.X[k]).norm());
            acc += sup;
        }
        rep.hs.push_back(h);
        rep.sup_discrepancy.push_back(acc / n_paths);
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < rep.hs.size(); ++i) {
        if (rep.sup_discrepancy[i] <= 0.0) continue;
        double lx = std::log(rep.hs[i]), ly = std::log(rep.sup_discrepancy[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m == 0) {
        rep.identically_zero = true;
        rep.fitted_order = std::numeric_limits<double>::infinity();
    } else if (m >= 2) {
        rep.fitted_order = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    return rep;
}

}  // namespace sid
