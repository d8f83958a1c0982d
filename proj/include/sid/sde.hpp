#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "sid/brownian.hpp"
#include "sid/problems.hpp"
#include "sid/schedules.hpp"

namespace sid {

struct TrajectoryFirstOrder {
    TimeGrid grid;
    std::vector<Vec> states;
    std::vector<double> f_gap;      // composite value gap at Z_k
    std::vector<double> grad_norm;  // smoothed drift norm at Z_k
    bool aborted = false;
    std::size_t last_valid = 0;

    std::size_t n_nodes() const { return states.size(); }
    double time(std::size_t k) const { return grid.node(k); }
};

struct TrajectorySecondOrder {
    TimeGrid grid;
    std::vector<Vec> X;
    std::vector<Vec> V;
    std::vector<double> f_gap;      // composite value gap at X_k
    std::vector<double> grad_norm;  // smoothed drift norm at X_k + beta_k V_k
    bool aborted = false;
    std::size_t last_valid = 0;
    int overshoot_steps = 0;  // steps with gamma_k h >= 1

    std::size_t n_nodes() const { return X.size(); }
    double time(std::size_t k) const { return grid.node(k); }
};

using EpsilonFn = std::function<double(double)>;

struct FirstOrderOptions {
    Vec z0;
    EpsilonFn epsilon;             // Tikhonov coefficient, empty = 0
    double diffusion_scale = 1.0;  // multiplies sigma; used by consistency studies
};

struct InertialOptions {
    Vec x0;
    Vec v0;
    std::function<double(double)> beta;  // empty = gamma-linked (beta = Gamma)
    EpsilonFn epsilon;
    double diffusion_scale = 1.0;
};

namespace detail {

inline void apply_noise(const DiffusionSchedule& sigma, double t, const Vec& state_point,
                        double scale, const Vec& dw, Vec& out) {
    const double s = scale * sigma.sigma_inf(t);
    if (s == 0.0) return;
    if (sigma.state_factor()) {
        Vec d = dw;
        sigma.state_factor()(state_point, d);
        out += s * d;
    } else {
        out += s * dw;
    }
}

}  // namespace detail

/// Euler-Maruyama on dZ = -[drift(Z) + eps(t) Z] dt + sigma(t, Z) dW.
inline TrajectoryFirstOrder simulate_first_order(const CompositeProblem& problem,
                                                 const DiffusionSchedule& sigma,
                                                 const TimeGrid& grid, const BrownianPath& path,
                                                 const FirstOrderOptions& opts) {
    if (path.grid().n_steps() != grid.n_steps() || path.dim() != problem.dim())
        throw ConfigError("brownian path does not match grid/problem");
    const std::size_t n = grid.n_steps();
    const double h = grid.h;

    TrajectoryFirstOrder out;
    out.grid = grid;
    out.states.reserve(n + 1);
    out.f_gap.reserve(n + 1);
    out.grad_norm.reserve(n + 1);

    Vec z = opts.z0;
    for (std::size_t k = 0;; ++k) {
        Vec drift = problem.drift(z);
        out.states.push_back(z);
        out.f_gap.push_back(problem.gap(z));
        out.grad_norm.push_back(drift.norm());
        out.last_valid = k;
        if (k == n) break;

        const double t = grid.node(k);
        if (opts.epsilon) drift += opts.epsilon(t) * z;
        Vec next = z - h * drift;
        detail::apply_noise(sigma, t, z, opts.diffusion_scale, path.increment(k), next);
        if (!next.allFinite()) {
            out.aborted = true;
            break;
        }
        z = std::move(next);
    }
    return out;
}

/// Euler-Maruyama on the time-rescaled first-order system
///   dY = -Gamma(t) drift(Y) dt + sqrt(Gamma(t)) sigma_s(theta(t), Y) dW(t),
/// where sigma_s is the diffusion in the s = theta(t) parametrization.
inline TrajectoryFirstOrder simulate_scaled_first_order(const CompositeProblem& problem,
                                                        const DiffusionSchedule& sigma_s,
                                                        const DerivedScales& scales,
                                                        const TimeGrid& grid,
                                                        const BrownianPath& path,
                                                        const FirstOrderOptions& opts) {
    if (path.grid().n_steps() != grid.n_steps() || path.dim() != problem.dim())
        throw ConfigError("brownian path does not match grid/problem");
    const std::size_t n = grid.n_steps();
    const double h = grid.h;

    TrajectoryFirstOrder out;
    out.grid = grid;
    out.states.reserve(n + 1);
    out.f_gap.reserve(n + 1);
    out.grad_norm.reserve(n + 1);

    Vec y = opts.z0;
    for (std::size_t k = 0;; ++k) {
        Vec drift = problem.drift(y);
        out.states.push_back(y);
        out.f_gap.push_back(problem.gap(y));
        out.grad_norm.push_back(drift.norm());
        out.last_valid = k;
        if (k == n) break;

        const double t = grid.node(k);
        const double G = scales.Gamma(t);
        if (opts.epsilon) drift += opts.epsilon(t) * y;
        Vec next = y - h * G * drift;
        detail::apply_noise(sigma_s, scales.theta(t), y, opts.diffusion_scale * std::sqrt(G),
                            path.increment(k), next);
        if (!next.allFinite()) {
            out.aborted = true;
            break;
        }
        y = std::move(next);
    }
    return out;
}

/// Explicit scheme for the inertial system, left-endpoint coefficients:
///   X_{k+1} = X_k + h V_k
///   V_{k+1} = (1 - gamma_k h) V_k - h [drift + eps_k id](X_k + beta_k V_k)
///             + sigma(t_k, X_k + beta_k V_k) dW_k.
inline TrajectorySecondOrder simulate_inertial(const CompositeProblem& problem,
                                               const DiffusionSchedule& sigma,
                                               const DerivedScales& scales, const TimeGrid& grid,
                                               const BrownianPath& path,
                                               const InertialOptions& opts) {
    if (path.grid().n_steps() != grid.n_steps() || path.dim() != problem.dim())
        throw ConfigError("brownian path does not match grid/problem");
    const std::size_t n = grid.n_steps();
    const double h = grid.h;
    auto beta = [&](double t) { return opts.beta ? opts.beta(t) : scales.Gamma(t); };

    TrajectorySecondOrder out;
    out.grid = grid;
    out.X.reserve(n + 1);
    out.V.reserve(n + 1);
    out.f_gap.reserve(n + 1);
    out.grad_norm.reserve(n + 1);

    Vec x = opts.x0, v = opts.v0;
    for (std::size_t k = 0;; ++k) {
        const double t = grid.node(k);
        Vec u = x + beta(t) * v;
        Vec drift = problem.drift(u);
        out.X.push_back(x);
        out.V.push_back(v);
        out.f_gap.push_back(problem.gap(x));
        out.grad_norm.push_back(drift.norm());
        out.last_valid = k;
        if (k == n) break;

        const double gk = scales.gamma(t);
        if (gk * h >= 1.0) ++out.overshoot_steps;
        if (opts.epsilon) drift += opts.epsilon(t) * u;
        Vec xn = x + h * v;
        Vec vn = (1.0 - gk * h) * v - h * drift;
        detail::apply_noise(sigma, t, u, opts.diffusion_scale, path.increment(k), vn);
        if (!xn.allFinite() || !vn.allFinite()) {
            out.aborted = true;
            break;
        }
        x = std::move(xn);
        v = std::move(vn);
    }
    return out;
}

}  // namespace sid
