#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "sid/sde.hpp"
#include "sid/transform.hpp"

namespace sid {

// ---------------------------------------------------------------------------
// Monte Carlo curves.
// ---------------------------------------------------------------------------

struct GapCurve {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> std_err;
    std::size_t n_paths = 0;
    std::size_t n_excluded = 0;
    bool negative_mean_flag = false;  // mean < -3 stderr somewhere
};

/// Log-spaced subset of grid node indices (always includes first and last).
inline std::vector<std::size_t> log_record_indices(const TimeGrid& grid,
                                                   std::size_t max_points = 400) {
    const std::size_t n = grid.n_steps();
    std::vector<std::size_t> idx;
    idx.push_back(0);
    const double lo = std::log(1.0), hi = std::log(static_cast<double>(n) + 1.0);
    for (std::size_t i = 1; i + 1 < max_points; ++i) {
        double f = lo + (hi - lo) * static_cast<double>(i) / (max_points - 1);
        auto k = static_cast<std::size_t>(std::llround(std::exp(f) - 1.0));
        if (k > idx.back() && k < n) idx.push_back(k);
    }
    if (idx.back() != n) idx.push_back(n);
    return idx;
}

/// One path = one value per record time; nullopt marks an aborted path.
using PathCurveFn = std::function<std::optional<std::vector<double>>(std::size_t path_index)>;

/// Sample mean and standard error over independent paths. Paths run
/// concurrently; the reduction is ordered by path index so results do not
/// depend on scheduling. Aborting more than 1% of paths fails the run.
inline GapCurve mc_curve(const std::vector<double>& times, const PathCurveFn& run_path,
                         std::size_t n_paths) {
    if (n_paths < 2) throw ConfigError("mc_curve requires n_paths >= 2");
    std::vector<std::optional<std::vector<double>>> rows(n_paths);
    parallel_for(n_paths, [&](std::size_t i) { rows[i] = run_path(i); });

    GapCurve out;
    out.times = times;
    out.n_paths = n_paths;
    const std::size_t m = times.size();
    std::vector<double> sum(m, 0.0), sum2(m, 0.0);
    std::size_t kept = 0;
    for (const auto& row : rows) {
        if (!row) {
            ++out.n_excluded;
            continue;
        }
        if (row->size() != m) throw NumericError("mc_curve: inconsistent record length");
        ++kept;
        for (std::size_t j = 0; j < m; ++j) {
            sum[j] += (*row)[j];
            sum2[j] += (*row)[j] * (*row)[j];
        }
    }
    if (out.n_excluded * 100 > n_paths)
        throw NumericError("mc_curve: " + std::to_string(out.n_excluded) + "/" +
                           std::to_string(n_paths) + " paths aborted (limit 1%)");
    out.mean.resize(m);
    out.std_err.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        double mu = sum[j] / kept;
        double var = kept > 1 ? std::max(0.0, (sum2[j] - kept * mu * mu) / (kept - 1.0)) : 0.0;
        out.mean[j] = mu;
        out.std_err[j] = std::sqrt(var / kept);
        if (mu < -3.0 * out.std_err[j]) out.negative_mean_flag = true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rate fits.
// ---------------------------------------------------------------------------

struct RateFit {
    double t_lo = 0.0, t_hi = 0.0;
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
    double target = 0.0, tolerance = 0.0;
    bool verdict = false;
    std::size_t n_points = 0;
    bool window_shrunk = false;   // nonpositive values dropped from the window
    bool floor_limited = false;   // linear_rate_fit: window inside noise floor
};

namespace detail {

inline void least_squares_line(const std::vector<double>& x, const std::vector<double>& y,
                               RateFit& fit) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double den = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
    }
    double ss_tot = syy - sy * sy / n;
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.n_points = n;
}

}  // namespace detail

/// Least-squares slope of log(gap) vs log(t) over the last window_fraction of
/// the log-time range. |slope - target| <= tolerance decides the verdict.
inline RateFit fit_loglog_rate(const GapCurve& curve, double window_fraction, double target,
                               double tolerance) {
    if (!(window_fraction > 0.0) || window_fraction >= 1.0)
        throw ConfigError("window_fraction must be in (0, 1)");
    RateFit fit;
    fit.target = target;
    fit.tolerance = tolerance;
    const double lt_end = std::log(curve.times.back());
    const double lt_start = std::log(curve.times.front());
    const double lt_lo = lt_end - window_fraction * (lt_end - lt_start);
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
        if (std::log(curve.times[i]) < lt_lo) continue;
        if (!(curve.mean[i] > 0.0)) {
            fit.window_shrunk = true;
            continue;
        }
        xs.push_back(std::log(curve.times[i]));
        ys.push_back(std::log(curve.mean[i]));
    }
    if (xs.size() < 10)
        throw NumericError("fit_loglog_rate: fewer than 10 usable points in the fit window");
    fit.t_lo = std::exp(xs.front());
    fit.t_hi = std::exp(xs.back());
    detail::least_squares_line(xs, ys, fit);
    fit.verdict = std::abs(fit.slope - target) <= tolerance;
    return fit;
}

/// Semi-log fit for exponential envelopes: slope of log(gap) vs t on the
/// pre-floor window gap > 10 * floor(t). Verdict: slope <= 0.8 * target
/// (target = -mu/2). The floor is the stationary response level induced by
/// the diffusion envelope.
inline RateFit linear_rate_fit(const GapCurve& curve, double mu, double lipschitz_L,
                               const std::function<double(double)>& sigma_inf, double t0) {
    RateFit fit;
    fit.target = -0.5 * mu;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < curve.times.size(); ++i) {
        const double t = curve.times[i];
        const double se = sigma_inf(t0 + (t - t0) / (4.0 * mu));
        const double floor = (lipschitz_L / (2.0 * mu)) * se * se;
        if (!(curve.mean[i] > 10.0 * floor) || !(curve.mean[i] > 0.0)) continue;
        xs.push_back(t);
        ys.push_back(std::log(curve.mean[i]));
    }
    if (xs.size() < 10) {
        fit.floor_limited = true;
        return fit;
    }
    fit.t_lo = xs.front();
    fit.t_hi = xs.back();
    detail::least_squares_line(xs, ys, fit);
    fit.verdict = fit.slope <= 0.8 * fit.target;
    return fit;
}

// ---------------------------------------------------------------------------
// Almost-sure rate surrogate.
// ---------------------------------------------------------------------------

struct AsRateReport {
    std::vector<double> ratios;  // per path: tail-decade max / head-decade max
    double median = 0.0;
};

/// Per-path tail diagnostic for weighted gaps w(t) * gap(t): ratio of the
/// maximum over the last time decade to the maximum over the first decade.
/// Identically-zero paths get ratio 0.
inline AsRateReport as_rate_diagnostic(const std::vector<std::vector<double>>& per_path_gaps,
                                       const std::vector<double>& times,
                                       const std::function<double(double)>& weight) {
    if (per_path_gaps.size() < 16)
        throw ConfigError("as_rate_diagnostic requires at least 16 paths");
    const double t_first = times.front(), t_last = times.back();
    AsRateReport rep;
    for (const auto& gaps : per_path_gaps) {
        double head = 0.0, tail = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double w = weight(times[i]) * gaps[i];
            if (times[i] <= 10.0 * t_first) head = std::max(head, w);
            if (times[i] >= t_last / 10.0) tail = std::max(tail, w);
        }
        rep.ratios.push_back(head > 0.0 ? tail / head : 0.0);
    }
    std::vector<double> sorted = rep.ratios;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    rep.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return rep;
}

// ---------------------------------------------------------------------------
// Strong consistency orders of the inertial scheme.
// ---------------------------------------------------------------------------

struct ConsistencyReport {
    std::vector<double> h_list;
    std::vector<double> err_sde;  // E sup_k ||dX|| + ||dV|| vs fine EM, coupled path
    std::vector<double> err_ode;  // same vs the deterministic fine run
    double order_sde = 0.0;
    double order_ode = 0.0;
    std::size_t n_paths = 0;
};

/// Strong error of the inertial scheme against (i) a fine Euler-Maruyama
/// reference on the same Brownian path and (ii) the deterministic fine run.
/// The scheme models per-evaluation gradient noise: at step size h the
/// per-step noise deviation is h * sigma, i.e. the matching SDE carries a
/// sqrt(h) factor on its diffusion. Both the coarse scheme and its fine
/// reference use that factor, so each h couples to its own reference SDE.
inline ConsistencyReport consistency_orders(const CompositeProblem& problem,
                                            const DerivedScales& scales,
                                            const DiffusionSchedule& sigma, double t_end,
                                            const std::vector<double>& h_list, int n_paths,
                                            uint64_t seed, const Vec& x0, const Vec& v0,
                                            int fine_factor = 64) {
    if (h_list.empty()) throw ConfigError("consistency_orders: empty h list");
    const double t0 = scales.t0();
    const double hf = h_list.front() / fine_factor;
    TimeGrid fine_grid(t0, t_end, hf);
    std::vector<std::size_t> factors;
    for (double h : h_list) {
        double f = h / hf;
        if (std::abs(f - std::llround(f)) > 1e-9 ||
            fine_grid.n_steps() % static_cast<std::size_t>(std::llround(f)) != 0)
            throw ConfigError("consistency_orders: h must be an integer multiple of the fine step");
        factors.push_back(static_cast<std::size_t>(std::llround(f)));
    }

    // Deterministic reference, computed once.
    InertialOptions det;
    det.x0 = x0;
    det.v0 = v0;
    TrajectorySecondOrder ode =
        simulate_inertial(problem, DiffusionSchedule::zero(), scales, fine_grid,
                          BrownianPath(problem.dim(), fine_grid, 0), det);
    if (ode.aborted) throw NumericError("consistency_orders: deterministic reference aborted");

    const std::size_t n_h = h_list.size();
    std::vector<std::vector<double>> es(n_paths, std::vector<double>(n_h, 0.0));
    std::vector<std::vector<double>> eo(n_paths, std::vector<double>(n_h, 0.0));

    parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
        BrownianPath fine_path(problem.dim(), fine_grid, path_seed(seed, p));
        for (std::size_t i = 0; i < n_h; ++i) {
            const double h = h_list[i];
            const double scale = std::sqrt(h);
            InertialOptions io;
            io.x0 = x0;
            io.v0 = v0;
            io.diffusion_scale = scale;
            TrajectorySecondOrder ref =
                simulate_inertial(problem, sigma, scales, fine_grid, fine_path, io);
            BrownianPath coarse = fine_path.coarsen(factors[i]);
            TimeGrid coarse_grid(t0, t_end, h);
            TrajectorySecondOrder run =
                simulate_inertial(problem, sigma, scales, coarse_grid, coarse, io);
            if (ref.aborted || run.aborted)
                throw NumericError("consistency_orders: reference or scheme aborted");
            double sup_s = 0.0, sup_o = 0.0;
            for (std::size_t k = 0; k < run.n_nodes(); ++k) {
                const std::size_t j = k * factors[i];
                sup_s = std::max(sup_s, (run.X[k] - ref.X[j]).norm() +
                                            (run.V[k] - ref.V[j]).norm());
                sup_o = std::max(sup_o, (run.X[k] - ode.X[j]).norm() +
                                            (run.V[k] - ode.V[j]).norm());
            }
            es[p][i] = sup_s;
            eo[p][i] = sup_o;
        }
    });

    ConsistencyReport rep;
    rep.h_list = h_list;
    rep.n_paths = static_cast<std::size_t>(n_paths);
    rep.err_sde.assign(n_h, 0.0);
    rep.err_ode.assign(n_h, 0.0);
    for (int p = 0; p < n_paths; ++p)
        for (std::size_t i = 0; i < n_h; ++i) {
            rep.err_sde[i] += es[p][i] / n_paths;
            rep.err_ode[i] += eo[p][i] / n_paths;
        }
    auto fit_order = [&](const std::vector<double>& errs) {
        RateFit f;
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < n_h; ++i)
            if (errs[i] > 0.0) {
                xs.push_back(std::log(h_list[i]));
                ys.push_back(std::log(errs[i]));
            }
        if (xs.size() < 2) return 0.0;
        detail::least_squares_line(xs, ys, f);
        return f.slope;
    };
    rep.order_sde = fit_order(rep.err_sde);
    rep.order_ode = fit_order(rep.err_ode);
    return rep;
}

}  // namespace sid
