#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sid/common.hpp"
#include "sid/quadrature.hpp"

namespace sid {

// ---------------------------------------------------------------------------
// Viscous damping gamma(t) and the scales derived from it.
// ---------------------------------------------------------------------------

enum class DampingKind { Power, Constant, Custom };

/// Viscous damping coefficient gamma(t), t >= t0. Builtin kinds have closed
/// forms for every derived scale; Custom falls back to quadrature tables.
class DampingSchedule {
  public:
    static DampingSchedule power(double alpha, double t0) {
        if (!(alpha > 1.0))
            throw ConfigError("power damping requires alpha > 1 (tail integral diverges), got " +
                              std::to_string(alpha));
        if (!(t0 > 0.0)) throw ConfigError("power damping requires t0 > 0");
        DampingSchedule d;
        d.kind_ = DampingKind::Power;
        d.alpha_ = alpha;
        d.t0_ = t0;
        return d;
    }

    static DampingSchedule constant(double c, double t0 = 0.0) {
        if (!(c > 0.0)) throw ConfigError("constant damping requires c > 0");
        DampingSchedule d;
        d.kind_ = DampingKind::Constant;
        d.c_ = c;
        d.t0_ = t0;
        return d;
    }

    /// Custom gamma with a declared non-increasing upper bound. The bound is
    /// what makes the damping hypothesis checkable at all for custom kinds.
    static DampingSchedule custom(std::function<double(double)> gamma,
                                  std::function<double(double)> upper_bound, double t0) {
        if (!gamma) throw ConfigError("custom damping requires a gamma callable");
        DampingSchedule d;
        d.kind_ = DampingKind::Custom;
        d.gamma_fn_ = std::move(gamma);
        d.bound_fn_ = std::move(upper_bound);
        d.t0_ = t0;
        return d;
    }

    DampingKind kind() const { return kind_; }
    double t0() const { return t0_; }
    double alpha() const { return alpha_; }
    double c() const { return c_; }
    bool has_declared_bound() const { return static_cast<bool>(bound_fn_); }

    double gamma(double t) const {
        switch (kind_) {
            case DampingKind::Power: return alpha_ / t;
            case DampingKind::Constant: return c_;
            case DampingKind::Custom: return gamma_fn_(t);
        }
        return 0.0;
    }

  private:
    DampingKind kind_ = DampingKind::Constant;
    double alpha_ = 0.0;
    double c_ = 1.0;
    double t0_ = 0.0;
    std::function<double(double)> gamma_fn_;
    std::function<double(double)> bound_fn_;
};

/// Scales derived from a damping schedule:
///   p(t)     = exp(int_{t0}^t gamma)
///   Gamma(t) = p(t) int_t^inf ds/p(s),  solving  Gamma' = gamma*Gamma - 1
///   theta(t) = s0 + int_{t0}^t Gamma(u) du        (strictly increasing)
///   A(t)     = int_{t0}^t du/Gamma(u)
///   a(t)     = 1/Gamma(t)
/// Immutable after construction; custom kinds precompute a quadrature table
/// over [t0, t_hi] once and interpolate.
class DerivedScales {
  public:
    DerivedScales(DampingSchedule d, double s0, double t_hi = 0.0)
        : d_(std::move(d)), s0_(s0), t0_(d_.t0()) {
        if (s0 < 0.0) throw ConfigError("s0 must be >= 0");
        if (d_.kind() == DampingKind::Custom) build_table(t_hi);
    }

    const DampingSchedule& damping() const { return d_; }
    double s0() const { return s0_; }
    double t0() const { return t0_; }
    double gamma(double t) const { return d_.gamma(t); }

    double Gamma(double t) const {
        check_domain(t);
        switch (d_.kind()) {
            case DampingKind::Power: return t / (d_.alpha() - 1.0);
            case DampingKind::Constant: return 1.0 / d_.c();
            case DampingKind::Custom: return interp(gamma_tab_, t);
        }
        return 0.0;
    }

    double a(double t) const { return 1.0 / Gamma(t); }

    double theta(double t) const {
        check_domain(t);
        switch (d_.kind()) {
            case DampingKind::Power:
                return s0_ + (t * t - t0_ * t0_) / (2.0 * (d_.alpha() - 1.0));
            case DampingKind::Constant: return s0_ + (t - t0_) / d_.c();
            case DampingKind::Custom: return s0_ + interp(theta_tab_, t);
        }
        return 0.0;
    }

    /// Inverse of theta by closed form, or bracketed bisection on the table
    /// (monotonicity guaranteed), relative tolerance 1e-10.
    double theta_inv(double s) const {
        if (s < s0_ - 1e-12 * std::max(1.0, std::abs(s0_)))
            throw std::domain_error("theta_inv: s below s0");
        switch (d_.kind()) {
            case DampingKind::Power: {
                double v = t0_ * t0_ + 2.0 * (d_.alpha() - 1.0) * (s - s0_);
                return std::sqrt(std::max(v, 0.0));
            }
            case DampingKind::Constant: return t0_ + d_.c() * (s - s0_);
            case DampingKind::Custom: {
                double lo = t0_, hi = nodes_.back();
                if (theta(hi) < s) throw std::domain_error("theta_inv: s beyond tabulated range");
                while (hi - lo > 1e-10 * std::max(1.0, hi)) {
                    double mid = 0.5 * (lo + hi);
                    (theta(mid) < s ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            }
        }
        return 0.0;
    }

    double A(double t) const {
        check_domain(t);
        switch (d_.kind()) {
            case DampingKind::Power: return (d_.alpha() - 1.0) * std::log(t / t0_);
            case DampingKind::Constant: return d_.c() * (t - t0_);
            case DampingKind::Custom: return interp(bigA_tab_, t);
        }
        return 0.0;
    }

    double exp_neg_A(double t) const {
        if (d_.kind() == DampingKind::Power) return std::pow(t0_ / t, d_.alpha() - 1.0);
        return std::exp(-A(t));
    }

    double table_t_hi() const { return nodes_.empty() ? 0.0 : nodes_.back(); }

  private:
    void check_domain(double t) const {
        if (t < t0_ - 1e-12 * std::max(1.0, std::abs(t0_)))
            throw std::domain_error("scale evaluated at t < t0");
    }

    // Gamma(t_i) = sum_{j>=i} exp(-(P_j - P_i)) J_j with
    //   P_j = int_{t0}^{t_j} gamma,  J_j = int_{t_j}^{t_{j+1}} exp(-(P(s)-P_j)) ds.
    // The backward recurrence S_i = J_i + exp(-dP_i) S_{i+1} keeps every
    // exponent non-positive, so nothing overflows however large P grows.
    void build_table(double t_hi) {
        const double lo = std::max(t0_, 1e-12);
        double hi = t_hi > lo ? t_hi : 1e3 * std::max(lo, 1.0);
        hi = std::max(hi, 1e3 * lo);
        const int n = 4096;
        nodes_.resize(n + 1);
        const double ratio = std::log(hi / lo) / n;
        for (int i = 0; i <= n; ++i) nodes_[i] = lo * std::exp(ratio * i);
        nodes_.front() = lo;
        nodes_.back() = hi;

        std::vector<double> dP(n), J(n);
        for (int i = 0; i < n; ++i) {
            const double a = nodes_[i], b = nodes_[i + 1];
            dP[i] = detail::gk15_panel([&](double s) { return d_.gamma(s); }, a, b).first;
            J[i] = detail::gk15_panel(
                       [&](double s) {
                           double ps = detail::gk15_panel(
                                           [&](double u) { return d_.gamma(u); }, a, s)
                                           .first;
                           return std::exp(-ps);
                       },
                       a, b)
                       .first;
        }
        // Tail beyond hi: exp(-gamma_lb (s-hi)) with gamma_lb sampled on
        // [hi, 4 hi]. Divergent-looking tails are rejected, not simulated.
        double gamma_lb = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 32; ++k)
            gamma_lb = std::min(gamma_lb, d_.gamma(hi * (1.0 + 3.0 * k / 32.0)));
        if (!(gamma_lb > 1e-12))
            throw ConfigError("custom damping: tail integral of 1/p appears divergent");
        double S = 1.0 / gamma_lb;
        gamma_tab_.assign(n + 1, 0.0);
        gamma_tab_[n] = S;
        for (int i = n - 1; i >= 0; --i) {
            S = J[i] + std::exp(-dP[i]) * S;
            gamma_tab_[i] = S;
        }
        theta_tab_.assign(n + 1, 0.0);
        bigA_tab_.assign(n + 1, 0.0);
        for (int i = 0; i < n; ++i) {
            const double w = nodes_[i + 1] - nodes_[i];
            theta_tab_[i + 1] =
                theta_tab_[i] + 0.5 * w * (gamma_tab_[i] + gamma_tab_[i + 1]);
            bigA_tab_[i + 1] =
                bigA_tab_[i] + 0.5 * w * (1.0 / gamma_tab_[i] + 1.0 / gamma_tab_[i + 1]);
        }
    }

    double interp(const std::vector<double>& tab, double t) const {
        if (t <= nodes_.front()) return tab.front();
        if (t >= nodes_.back()) {
            if (t > nodes_.back() * (1.0 + 1e-9))
                throw std::domain_error("custom schedule evaluated beyond tabulated range");
            return tab.back();
        }
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
        double w = (t - nodes_[i]) / (nodes_[i + 1] - nodes_[i]);
        return (1.0 - w) * tab[i] + w * tab[i + 1];
    }

    DampingSchedule d_;
    double s0_;
    double t0_;
    std::vector<double> nodes_, gamma_tab_, theta_tab_, bigA_tab_;
};

/// Gamma(t) for a damping schedule. Custom kinds build a local table with the
/// truncation horizon tied to the query point.
inline double big_gamma(const DampingSchedule& d, double t) {
    if (t < d.t0()) throw std::domain_error("big_gamma: t < t0");
    if (d.kind() == DampingKind::Custom) return DerivedScales(d, 0.0, 1e3 * t).Gamma(t);
    return DerivedScales(d, 0.0).Gamma(t);
}

inline double theta(const DampingSchedule& d, double s0, double t) {
    return DerivedScales(d, s0, d.kind() == DampingKind::Custom ? 1e3 * t : 0.0).theta(t);
}

inline double exp_neg_A(const DampingSchedule& d, double t) {
    return DerivedScales(d, 0.0, d.kind() == DampingKind::Custom ? 1e3 * t : 0.0).exp_neg_A(t);
}

/// I[h](t) = exp(-A(t)) int_{t0}^t h(u) exp(A(u))/Gamma(u) du.
/// The integrand is evaluated with the exponent A(u)-A(t) <= 0 so the value
/// stays representable even when A itself is huge.
inline double I_transform(const DerivedScales& sc, const std::function<double(double)>& h,
                          double t) {
    const double At = sc.A(t);
    return integrate_or_throw(
        [&](double u) { return h(u) * std::exp(sc.A(u) - At) / sc.Gamma(u); }, sc.t0(), t);
}

inline double I_transform(const DampingSchedule& d, const std::function<double(double)>& h,
                          double t) {
    DerivedScales sc(d, 0.0, d.kind() == DampingKind::Custom ? 1e3 * t : 0.0);
    return I_transform(sc, h, t);
}

// ---------------------------------------------------------------------------
// Diffusion (volatility) envelope sigma_inf(t) and optional state factor.
// ---------------------------------------------------------------------------

enum class EnvelopeKind { Constant, Power, Exponential, Callable };

/// sigma(t, x) = sigma_inf(t) * D(x), D defaulting to the identity.
/// The envelope must be bounded on [t0, inf), hence non-increasing kinds only.
class DiffusionSchedule {
  public:
    static DiffusionSchedule zero() { return constant(0.0); }

    static DiffusionSchedule constant(double c) {
        if (c < 0.0) throw ConfigError("diffusion envelope must be nonnegative");
        DiffusionSchedule s;
        s.kind_ = EnvelopeKind::Constant;
        s.c_ = c;
        s.sigma_star_ = c;
        return s;
    }

    /// c * t^{-q}, q >= 0, defined for t >= t0 > 0.
    static DiffusionSchedule power(double c, double q, double t0) {
        if (c < 0.0) throw ConfigError("diffusion envelope must be nonnegative");
        if (q < 0.0) throw ConfigError("power envelope with q < 0 is unbounded");
        if (!(t0 > 0.0)) throw ConfigError("power envelope requires t0 > 0");
        DiffusionSchedule s;
        s.kind_ = EnvelopeKind::Power;
        s.c_ = c;
        s.q_ = q;
        s.t0_ = t0;
        s.sigma_star_ = c * std::pow(t0, -q);
        return s;
    }

    /// c * exp(-a t), a >= 0.
    static DiffusionSchedule exponential(double c, double a, double t0 = 0.0) {
        if (c < 0.0) throw ConfigError("diffusion envelope must be nonnegative");
        if (a < 0.0) throw ConfigError("exponential envelope with a < 0 is unbounded");
        DiffusionSchedule s;
        s.kind_ = EnvelopeKind::Exponential;
        s.c_ = c;
        s.a_ = a;
        s.t0_ = t0;
        s.sigma_star_ = c * std::exp(-a * t0);
        return s;
    }

    /// Arbitrary bounded envelope; used internally when re-expressing a
    /// diffusion in another time parametrization.
    static DiffusionSchedule callable(std::function<double(double)> fn, double sigma_star) {
        DiffusionSchedule s;
        s.kind_ = EnvelopeKind::Callable;
        s.fn_ = std::move(fn);
        s.sigma_star_ = sigma_star;
        return s;
    }

    double sigma_inf(double t) const {
        switch (kind_) {
            case EnvelopeKind::Constant: return c_;
            case EnvelopeKind::Power: return c_ * std::pow(t, -q_);
            case EnvelopeKind::Exponential: return c_ * std::exp(-a_ * t);
            case EnvelopeKind::Callable: return fn_(t);
        }
        return 0.0;
    }

    double sigma_star() const { return sigma_star_; }
    EnvelopeKind kind() const { return kind_; }
    double coeff() const { return c_; }
    double power_q() const { return q_; }
    double exp_a() const { return a_; }
    bool is_zero() const { return kind_ == EnvelopeKind::Constant && c_ == 0.0; }

    /// Optional state coupling D(x) applied to the noise increment, with its
    /// declared Lipschitz constant l0. Empty means D = identity.
    using StateFactor = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& dw)>;
    void set_state_factor(StateFactor f, double l0) {
        state_factor_ = std::move(f);
        l0_ = l0;
    }
    const StateFactor& state_factor() const { return state_factor_; }
    double l0() const { return l0_; }

  private:
    EnvelopeKind kind_ = EnvelopeKind::Constant;
    double c_ = 0.0, q_ = 0.0, a_ = 0.0, t0_ = 0.0;
    double sigma_star_ = 0.0;
    std::function<double(double)> fn_;
    StateFactor state_factor_;
    double l0_ = 0.0;
};

// ---------------------------------------------------------------------------
// Tikhonov schedule eps(t) = theta(t)^{-r}.
// ---------------------------------------------------------------------------

struct TikhonovSchedule {
    double r;

    explicit TikhonovSchedule(double r_) : r(r_) {
        if (!(r > 0.0) || r > 1.0) throw ConfigError("tikhonov exponent r must be in (0, 1]");
    }

    double eps(const DerivedScales& sc, double t) const { return std::pow(sc.theta(t), -r); }
};

// ---------------------------------------------------------------------------
// Integrability classification of (damping, diffusion) pairs.
// ---------------------------------------------------------------------------

/// Which long-horizon statements a (damping, diffusion) pair supports:
///   traj_ok: Gamma*sigma_inf            square-integrable
///   rate_ok: sqrt(theta)*Gamma*sigma_inf square-integrable
///   fast_ok: t^2*sigma_inf              square-integrable
struct IntegrabilityReport {
    bool traj_ok = false;
    bool rate_ok = false;
    bool fast_ok = false;
    bool heuristic = false;  // custom kinds: finite-horizon tail test only
    double q_critical_traj = 0.0;
    double q_critical_rate = 0.0;
    double q_critical_fast = 0.0;
    std::string note;
};

inline IntegrabilityReport integrability_class(const DampingSchedule& d,
                                               const DiffusionSchedule& sigma,
                                               double horizon = 1e4) {
    IntegrabilityReport rep;
    if (sigma.is_zero()) {
        rep.traj_ok = rep.rate_ok = rep.fast_ok = true;
        rep.note = "zero diffusion";
        return rep;
    }
    const bool power_damping = d.kind() == DampingKind::Power;
    const bool const_damping = d.kind() == DampingKind::Constant;
    if ((power_damping || const_damping) && sigma.kind() == EnvelopeKind::Exponential &&
        sigma.exp_a() > 0.0) {
        rep.traj_ok = rep.rate_ok = rep.fast_ok = true;
        rep.note = "exponential envelope";
        return rep;
    }
    if ((power_damping || const_damping) && sigma.kind() == EnvelopeKind::Constant) {
        rep.note = "constant nonzero envelope";
        return rep;
    }
    if ((power_damping || const_damping) && sigma.kind() == EnvelopeKind::Power) {
        const double q = sigma.power_q();
        if (power_damping) {
            // Gamma ~ t, theta ~ t^2: integrands t^{2-2q}, t^{4-2q}, t^{4-2q}.
            rep.q_critical_traj = 1.5;
            rep.q_critical_rate = 2.5;
            rep.q_critical_fast = 2.5;
        } else {
            // Gamma const, theta ~ t: integrands t^{-2q}, t^{1-2q}, t^{4-2q}.
            rep.q_critical_traj = 0.5;
            rep.q_critical_rate = 1.0;
            rep.q_critical_fast = 2.5;
        }
        rep.traj_ok = q > rep.q_critical_traj;
        rep.rate_ok = q > rep.q_critical_rate;
        rep.fast_ok = q > rep.q_critical_fast;
        rep.note = "analytic power-law classification";
        return rep;
    }
    // Custom damping: finite-horizon decade test on the three integrands.
    rep.heuristic = true;
    rep.note = "heuristic finite-horizon tail test";
    DerivedScales sc(d, 1.0, horizon * 1.05);
    auto decade_converged = [&](const std::function<double(double)>& w) {
        const double t0 = std::max(d.t0(), 1e-6);
        double total = integrate_or_throw(w, t0, horizon, 1e-10, 1e-6);
        double tail = integrate_or_throw(w, horizon / 10.0, horizon, 1e-10, 1e-6);
        return total > 0.0 ? (tail / total) < 0.1 : true;
    };
    auto s2 = [&](double t) {
        double s = sigma.sigma_inf(t);
        return s * s;
    };
    rep.traj_ok = decade_converged([&](double t) {
        double g = sc.Gamma(t);
        return g * g * s2(t);
    });
    rep.rate_ok = decade_converged([&](double t) {
        double g = sc.Gamma(t);
        return sc.theta(t) * g * g * s2(t);
    });
    rep.fast_ok = decade_converged([&](double t) { return t * t * t * t * s2(t); });
    return rep;
}

/// True when the damping hypothesis is certifiable: builtin kinds are
/// analytic, custom kinds need the declared non-increasing bound.
inline bool damping_hypothesis_ok(const DampingSchedule& d, std::string* why = nullptr) {
    switch (d.kind()) {
        case DampingKind::Power:
        case DampingKind::Constant: return true;
        case DampingKind::Custom:
            if (!d.has_declared_bound()) {
                if (why) *why = "custom damping lacks a declared non-increasing upper bound";
                return false;
            }
            return true;
    }
    return false;
}

}  // namespace sid
