#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sid/analysis.hpp"
#include "sid/config.hpp"
#include "sid/csv.hpp"
#include "sid/problems.hpp"
#include "sid/schedules.hpp"
#include "sid/sde.hpp"
#include "sid/tikhonov.hpp"
#include "sid/transform.hpp"

namespace sid {

// ---------------------------------------------------------------------------
// Spec -> objects.
// ---------------------------------------------------------------------------

inline Mat load_samples_csv(const std::string& path, Vec& labels) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open samples csv: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        rows.push_back(detail::parse_number_list("samples_csv", line));
    }
    if (rows.empty()) throw ConfigError("samples csv is empty: " + path);
    const std::size_t cols = rows[0].size();
    if (cols < 2) throw ConfigError("samples csv needs features plus a trailing label column");
    Mat Z(rows.size(), cols - 1);
    labels.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw ConfigError("samples csv has ragged rows");
        for (std::size_t c = 0; c + 1 < cols; ++c)
            Z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        labels[static_cast<Eigen::Index>(r)] = rows[r][cols - 1];
    }
    return Z;
}

inline CompositeProblem make_problem(const ProblemSpec& spec) {
    Mat a = spec.a;
    Vec b = spec.b;
    if (spec.kind == "logistic" && !spec.samples_csv.empty()) a = load_samples_csv(spec.samples_csv, b);
    CompositeProblem p = builtin_problem(spec.kind, a, b, spec.param);
    p.moreau_lambda = spec.moreau_lambda;
    return p;
}

inline DampingSchedule make_damping(const DampingSpec& spec) {
    if (spec.kind == "power") return DampingSchedule::power(spec.alpha, spec.t0);
    if (spec.kind == "constant") return DampingSchedule::constant(spec.c, spec.t0);
    throw ConfigError("unknown damping kind '" + spec.kind + "'");
}

inline DiffusionSchedule make_diffusion(const DiffusionSpec& spec, double t0) {
    if (spec.kind == "zero") return DiffusionSchedule::zero();
    if (spec.kind == "constant") return DiffusionSchedule::constant(spec.c);
    if (spec.kind == "power") return DiffusionSchedule::power(spec.c, spec.q, t0);
    if (spec.kind == "exponential") return DiffusionSchedule::exponential(spec.c, spec.a, t0);
    throw ConfigError("unknown diffusion kind '" + spec.kind + "'");
}

// ---------------------------------------------------------------------------
// Config-level Monte Carlo gap curve.
// ---------------------------------------------------------------------------

struct McGapResult {
    GapCurve curve;
    std::vector<std::vector<double>> per_path_gaps;  // kept paths only
    std::vector<double> times;
};

inline McGapResult mc_gap_curve(const RunConfig& cfg, int n_paths, uint64_t seed) {
    const CompositeProblem problem = make_problem(cfg.problem);
    const DampingSchedule damping = make_damping(cfg.damping);
    const DerivedScales scales(damping, cfg.s0);
    const DiffusionSchedule sigma = make_diffusion(cfg.diffusion, cfg.grid.t0);
    const TimeGrid grid(cfg.grid.t0, cfg.grid.horizon, cfg.grid.h);
    const auto rec = log_record_indices(grid);

    McGapResult out;
    out.times.reserve(rec.size());
    for (auto k : rec) out.times.push_back(grid.node(k));

    EpsilonFn eps;
    if (cfg.tikhonov.enabled) {
        TikhonovSchedule ts(cfg.tikhonov.r);
        eps = [ts, &scales](double t) { return ts.eps(scales, t); };
    }

    std::vector<std::optional<std::vector<double>>> rows(static_cast<std::size_t>(n_paths));
    auto runner = [&](std::size_t i) -> std::optional<std::vector<double>> {
        BrownianPath path(problem.dim(), grid, path_seed(seed, i));
        std::vector<double> gaps;
        gaps.reserve(rec.size());
        if (cfg.mode == "first_order") {
            FirstOrderOptions fo;
            fo.z0 = cfg.problem.x0;
            fo.epsilon = eps;
            TrajectoryFirstOrder tr = simulate_first_order(problem, sigma, grid, path, fo);
            if (tr.aborted) return std::nullopt;
            for (auto k : rec) gaps.push_back(tr.f_gap[k]);
        } else if (cfg.mode == "scaled") {
            FirstOrderOptions fo;
            fo.z0 = cfg.problem.x0;
            TrajectoryFirstOrder tr =
                simulate_scaled_first_order(problem, sigma, scales, grid, path, fo);
            if (tr.aborted) return std::nullopt;
            for (auto k : rec) gaps.push_back(tr.f_gap[k]);
        } else if (cfg.mode == "inertial") {
            InertialOptions io;
            io.x0 = cfg.problem.x0;
            io.v0 = cfg.problem.v0;
            io.epsilon = eps;
            TrajectorySecondOrder tr = simulate_inertial(problem, sigma, scales, grid, path, io);
            if (tr.aborted) return std::nullopt;
            for (auto k : rec) gaps.push_back(tr.f_gap[k]);
        } else {
            throw ConfigError("unknown run mode '" + cfg.mode + "'");
        }
        return gaps;
    };
    parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t i) { rows[i] = runner(i); });
    out.curve = mc_curve(
        out.times, [&](std::size_t i) { return rows[i]; }, static_cast<std::size_t>(n_paths));
    out.per_path_gaps.reserve(static_cast<std::size_t>(n_paths));
    for (auto& r : rows)
        if (r) out.per_path_gaps.push_back(std::move(*r));
    return out;
}

// ---------------------------------------------------------------------------
// Scenario runner.
// ---------------------------------------------------------------------------

struct ScenarioResult {
    bool ok = false;
    std::string run_dir;
    std::vector<std::pair<std::string, std::string>> summary;

    void add(const std::string& k, const std::string& v) { summary.emplace_back(k, v); }
    void add(const std::string& k, double v) {
        std::ostringstream os;
        os.precision(12);
        os << v;
        summary.emplace_back(k, os.str());
    }
    void add(const std::string& k, bool v) { summary.emplace_back(k, v ? "true" : "false"); }
};

namespace detail {

inline std::string timestamp_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
    return buf;
}

inline void write_summary(const std::string& dir, const RunConfig& cfg, ScenarioResult& res) {
    std::ostringstream os;
    for (const auto& [k, v] : res.summary) os << k << " = " << v << "\n";
    os << "\n# resolved configuration\n" << serialize_config(cfg);
    write_text(dir + "/summary.txt", os.str());
}

}  // namespace detail

inline ScenarioResult run_simulate(const RunConfig& cfg, const std::string& dir);
inline ScenarioResult run_rates(const RunConfig& cfg, const std::string& dir);
inline ScenarioResult run_consistency(const RunConfig& cfg, const std::string& dir);
inline ScenarioResult run_transform_check(const RunConfig& cfg, const std::string& dir);
inline ScenarioResult run_tikhonov(const RunConfig& cfg, const std::string& dir);
inline ScenarioResult run_pl(const RunConfig& cfg, const std::string& dir);

/// Executes the configured scenario, writes CSV artifacts plus a summary of
/// every verdict, and reports overall success. A fresh directory
/// {out}/{scenario}_{seed}_{timestamp} is used unless run_dir is given.
inline ScenarioResult run_scenario(const RunConfig& cfg, std::string run_dir = "") {
    if (run_dir.empty())
        run_dir = cfg.out + "/" + cfg.scenario + "_" + std::to_string(cfg.seed) + "_" +
                  detail::timestamp_now();
    std::filesystem::create_directories(run_dir);
    ScenarioResult res;
    if (cfg.scenario == "simulate") res = run_simulate(cfg, run_dir);
    else if (cfg.scenario == "rates") res = run_rates(cfg, run_dir);
    else if (cfg.scenario == "consistency") res = run_consistency(cfg, run_dir);
    else if (cfg.scenario == "transform-check") res = run_transform_check(cfg, run_dir);
    else if (cfg.scenario == "tikhonov") res = run_tikhonov(cfg, run_dir);
    else if (cfg.scenario == "pl") res = run_pl(cfg, run_dir);
    else throw ConfigError("unknown scenario '" + cfg.scenario + "'");
    res.run_dir = run_dir;
    detail::write_summary(run_dir, cfg, res);
    return res;
}

// --------------------------------------------------------------------------

inline ScenarioResult run_simulate(const RunConfig& cfg, const std::string& dir) {
    ScenarioResult res;
    const CompositeProblem problem = make_problem(cfg.problem);
    const DampingSchedule damping = make_damping(cfg.damping);
    const DerivedScales scales(damping, cfg.s0);
    const DiffusionSchedule sigma = make_diffusion(cfg.diffusion, cfg.grid.t0);
    const TimeGrid grid(cfg.grid.t0, cfg.grid.horizon, cfg.grid.h);
    const auto rec = log_record_indices(grid, 2000);
    const bool dump_state = problem.dim() <= 8;

    int aborted = 0;
    for (int p = 0; p < cfg.paths; ++p) {
        BrownianPath path(problem.dim(), grid, path_seed(cfg.seed, static_cast<uint64_t>(p)));
        std::vector<std::vector<double>> rows;
        auto emit = [&](std::size_t k, const Vec& state, double gap, double gn) {
            std::vector<double> row{grid.node(k)};
            if (dump_state)
                for (int c = 0; c < state.size(); ++c) row.push_back(state[c]);
            else
                row.push_back(state.norm());
            row.push_back(gap);
            row.push_back(gn);
            rows.push_back(std::move(row));
        };
        std::vector<std::string> header{"t"};
        if (dump_state)
            for (int c = 0; c < problem.dim(); ++c) header.push_back("x" + std::to_string(c));
        else
            header.push_back("state_norm");
        header.push_back("f_gap");
        header.push_back("grad_norm");

        if (cfg.mode == "first_order") {
            FirstOrderOptions fo;
            fo.z0 = cfg.problem.x0;
            if (cfg.tikhonov.enabled) {
                TikhonovSchedule ts(cfg.tikhonov.r);
                fo.epsilon = [ts, &scales](double t) { return ts.eps(scales, t); };
            }
            auto tr = simulate_first_order(problem, sigma, grid, path, fo);
            if (tr.aborted) ++aborted;
            for (auto k : rec)
                if (k <= tr.last_valid) emit(k, tr.states[k], tr.f_gap[k], tr.grad_norm[k]);
        } else {
            InertialOptions io;
            io.x0 = cfg.problem.x0;
            io.v0 = cfg.problem.v0;
            if (cfg.tikhonov.enabled) {
                TikhonovSchedule ts(cfg.tikhonov.r);
                io.epsilon = [ts, &scales](double t) { return ts.eps(scales, t); };
            }
            auto tr = simulate_inertial(problem, sigma, scales, grid, path, io);
            if (tr.aborted) ++aborted;
            for (auto k : rec)
                if (k <= tr.last_valid) emit(k, tr.X[k], tr.f_gap[k], tr.grad_norm[k]);
        }
        char name[32];
        std::snprintf(name, sizeof(name), "path_%03d.csv", p);
        write_csv(dir + "/" + name, header, rows);
    }
    res.add("scenario", std::string("simulate"));
    res.add("paths", static_cast<double>(cfg.paths));
    res.add("aborted_paths", static_cast<double>(aborted));
    res.ok = aborted * 100 <= cfg.paths;
    res.add("verdict_overall", res.ok);
    return res;
}

inline ScenarioResult run_rates(const RunConfig& cfg, const std::string& dir) {
    ScenarioResult res;
    const DampingSchedule damping = make_damping(cfg.damping);
    const DiffusionSchedule sigma = make_diffusion(cfg.diffusion, cfg.grid.t0);
    if (cfg.mode == "inertial" || cfg.mode == "scaled") {
        IntegrabilityReport ic = integrability_class(damping, sigma);
        res.add("integrability_traj_ok", ic.traj_ok);
        res.add("integrability_rate_ok", ic.rate_ok);
        res.add("integrability_fast_ok", ic.fast_ok);
        if (!ic.rate_ok)
            throw ConfigError("rates scenario refused: rate_ok false (needs envelope decay q > " +
                              std::to_string(ic.q_critical_rate) + ")");
    }
    McGapResult mc = mc_gap_curve(cfg, cfg.paths, cfg.seed);
    RateFit fit = fit_loglog_rate(mc.curve, cfg.window_fraction, cfg.target_slope, cfg.slope_tol);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < mc.times.size(); ++i)
        rows.push_back({mc.times[i], mc.curve.mean[i], mc.curve.std_err[i]});
    write_csv(dir + "/gap_curve.csv", {"t", "mean_gap", "std_err"}, rows);

    res.add("slope", fit.slope);
    res.add("intercept", fit.intercept);
    res.add("r2", fit.r2);
    res.add("target_slope", fit.target);
    res.add("slope_tol", fit.tolerance);
    res.add("fit_window_lo", fit.t_lo);
    res.add("fit_window_hi", fit.t_hi);
    res.add("excluded_paths", static_cast<double>(mc.curve.n_excluded));
    res.add("verdict_slope", fit.verdict);
    res.ok = fit.verdict;
    res.add("verdict_overall", res.ok);
    return res;
}

inline ScenarioResult run_consistency(const RunConfig& cfg, const std::string& dir) {
    ScenarioResult res;
    const CompositeProblem problem = make_problem(cfg.problem);
    const DampingSchedule damping = make_damping(cfg.damping);
    const DerivedScales scales(damping, cfg.s0);
    const DiffusionSchedule sigma = make_diffusion(cfg.diffusion, cfg.grid.t0);
    std::vector<double> h_list;
    for (int i = 0; i < cfg.n_halvings; ++i) h_list.push_back(cfg.h0 / (1 << i));
    ConsistencyReport rep =
        consistency_orders(problem, scales, sigma, cfg.t_end, h_list, cfg.paths, cfg.seed,
                           cfg.problem.x0, cfg.problem.v0);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < h_list.size(); ++i)
        rows.push_back({h_list[i], rep.err_sde[i], rep.err_ode[i]});
    write_csv(dir + "/consistency.csv", {"h", "strong_err_vs_sde", "strong_err_vs_ode"}, rows);

    const bool sde_ok = std::abs(rep.order_sde - 1.0) <= 0.2;
    const bool ode_ok = std::abs(rep.order_ode - 0.5) <= 0.15;
    res.add("order_vs_sde", rep.order_sde);
    res.add("order_vs_ode", rep.order_ode);
    res.add("verdict_order_sde", sde_ok);
    res.add("verdict_order_ode", ode_ok);
    res.ok = sde_ok && ode_ok;
    res.add("verdict_overall", res.ok);
    return res;
}

inline ScenarioResult run_transform_check(const RunConfig& cfg, const std::string& dir) {
    ScenarioResult res;
    const CompositeProblem problem = make_problem(cfg.problem);
    const DampingSchedule damping = make_damping(cfg.damping);
    const DerivedScales scales(damping, cfg.s0);
    const DiffusionSchedule sigma = make_diffusion(cfg.diffusion, cfg.grid.t0);
    EquivalenceReport rep =
        transform_equivalence_check(problem, sigma, scales, cfg.t_end, cfg.h0, cfg.n_halvings,
                                    cfg.problem.x0, cfg.problem.v0, cfg.seed);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < rep.hs.size(); ++i)
        rows.push_back({rep.hs[i], rep.sup_discrepancy[i]});
    write_csv(dir + "/transform_check.csv", {"h", "sup_discrepancy"}, rows);

    const double min_order = sigma.is_zero() ? 0.9 : 0.4;
    res.add("fitted_order", rep.fitted_order);
    res.add("required_order", min_order);
    res.add("identically_zero", rep.identically_zero);
    res.ok = rep.identically_zero || rep.fitted_order >= min_order;
    res.add("verdict_overall", res.ok);
    return res;
}

inline ScenarioResult run_tikhonov(const RunConfig& cfg, const std::string& dir) {
    ScenarioResult res;
    if (!cfg.tikhonov.enabled) throw ConfigError("tikhonov scenario requires tikhonov.enabled");
    const CompositeProblem problem = make_problem(cfg.problem);
    const DampingSchedule damping = make_damping(cfg.damping);
    const DerivedScales scales(damping, cfg.s0);
    const DiffusionSchedule sigma = make_diffusion(cfg.diffusion, cfg.grid.t0);
    const TikhonovSchedule ts(cfg.tikhonov.r);
    const TimeGrid grid(cfg.grid.t0, cfg.grid.horizon, cfg.grid.h);

    TikhonovConditionReport cond = check_tikhonov_conditions(scales, ts, problem, cfg.grid.horizon);
    MinNormReport rep = min_norm_convergence_run(problem, scales, ts, sigma, grid, cfg.paths,
                                                 cfg.seed, cfg.problem.x0, cfg.problem.v0);
    if (rep.degenerate_fixture) {
        res.add("degenerate_fixture", true);
        res.ok = false;
        res.add("verdict_overall", res.ok);
        return res;
    }

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < rep.times.size(); ++i)
        rows.push_back({rep.times[i], rep.dist2_tikhonov[i], rep.dist2_control[i],
                        rep.gap_tikhonov[i]});
    write_csv(dir + "/min_norm.csv",
              {"t", "e_dist2_tikhonov", "e_dist2_control", "e_f_gap_tikhonov"}, rows);

    res.add("eps_vanishes", cond.eps_vanishes);
    res.add("weighted_integral_diverges", cond.weighted_integral_diverges);
    res.add("norm_gap_integral_converges", cond.norm_gap_integral_converges);
    res.add("t2_last_decade_share", cond.t2_last_decade_share);
    res.add("t3_last_decade_share", cond.t3_last_decade_share);
    if (cond.r_range_checked) {
        res.add("r_range_ok", cond.r_range_ok);
        res.add("r_threshold", cond.r_threshold);
    } else {
        res.add("r_range_note", std::string("skipped: no error-bound exponent declared"));
    }
    res.add("initial_dist2", rep.initial_dist2);
    res.add("final_dist2_tikhonov", rep.final_tikhonov);
    res.add("final_dist2_control", rep.final_control);
    res.add("tikhonov_below_10pct_of_control", rep.tikhonov_below_10pct_of_control);
    res.ok = rep.tikhonov_below_10pct_of_control;
    res.add("verdict_overall", res.ok);
    return res;
}

inline ScenarioResult run_pl(const RunConfig& cfg, const std::string& dir) {
    ScenarioResult res;
    const CompositeProblem problem = make_problem(cfg.problem);
    const double mu = cfg.mu;
    RunConfig c = cfg;
    c.mode = "inertial";
    c.damping.kind = "constant";
    c.damping.c = std::sqrt(2.0 * mu);
    c.damping.t0 = cfg.grid.t0;
    const DiffusionSchedule sigma = make_diffusion(cfg.diffusion, cfg.grid.t0);

    McGapResult mc = mc_gap_curve(c, c.paths, c.seed);
    RateFit fit = linear_rate_fit(
        mc.curve, mu, problem.f.lipschitz_L, [&](double t) { return sigma.sigma_inf(t); },
        cfg.grid.t0);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < mc.times.size(); ++i)
        rows.push_back({mc.times[i], mc.curve.mean[i], mc.curve.std_err[i]});
    write_csv(dir + "/pl_gap_curve.csv", {"t", "mean_gap", "std_err"}, rows);

    res.add("floor_limited", fit.floor_limited);
    res.add("slope", fit.slope);
    res.add("target_slope", fit.target);
    res.add("fit_window_lo", fit.t_lo);
    res.add("fit_window_hi", fit.t_hi);
    res.ok = !fit.floor_limited && fit.verdict;
    res.add("verdict_slope", fit.verdict);
    res.add("verdict_overall", res.ok);
    return res;
}

}  // namespace sid
