#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "sid/common.hpp"

namespace sid {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Smooth part f.
// ---------------------------------------------------------------------------

/// Convex C^1 objective with Lipschitz gradient and exact verification data.
struct SmoothObjective {
    int dim = 0;
    std::function<double(const Vec&)> eval;
    std::function<Vec(const Vec&)> grad;
    double lipschitz_L = 0.0;
    double min_value = 0.0;
    /// Projection onto argmin f; empty when no closed form is available.
    std::function<Vec(const Vec&)> solution_projector;
    std::optional<double> pl_constant_mu;
    std::optional<double> eb_exponent_p;
    std::optional<double> eb_constant_kappa;

    double gap(const Vec& x) const { return eval(x) - min_value; }
    bool has_projector() const { return static_cast<bool>(solution_projector); }
    double dist_to_solutions(const Vec& x) const {
        return (x - solution_projector(x)).norm();
    }
};

// ---------------------------------------------------------------------------
// Nonsmooth part g with its proximal map.
// ---------------------------------------------------------------------------

struct NonsmoothTerm {
    std::function<double(const Vec&)> eval;
    std::function<Vec(double, const Vec&)> prox;  // (lambda, x) -> prox_{lambda g}(x)
    std::optional<double> lipschitz_L0;
};

/// Gradient of the Moreau envelope g_lambda: (x - prox_{lambda g}(x)) / lambda.
inline Vec moreau_grad(const NonsmoothTerm& g, double lambda, const Vec& x) {
    if (!(lambda > 0.0)) throw ConfigError("moreau smoothing parameter must be positive");
    return (x - g.prox(lambda, x)) / lambda;
}

/// Moreau envelope value g_lambda(x) = g(p) + ||x - p||^2 / (2 lambda).
inline double moreau_value(const NonsmoothTerm& g, double lambda, const Vec& x) {
    if (!(lambda > 0.0)) throw ConfigError("moreau smoothing parameter must be positive");
    Vec p = g.prox(lambda, x);
    return g.eval(p) + (x - p).squaredNorm() / (2.0 * lambda);
}

inline NonsmoothTerm l1_term(double weight) {
    if (weight < 0.0) throw ConfigError("l1 weight must be nonnegative");
    NonsmoothTerm g;
    g.eval = [weight](const Vec& x) { return weight * x.lpNorm<1>(); };
    g.prox = [weight](double lambda, const Vec& x) {
        const double tau = lambda * weight;
        Vec y = x;
        for (int i = 0; i < y.size(); ++i) {
            double v = std::abs(y[i]) - tau;
            y[i] = v > 0.0 ? (y[i] > 0.0 ? v : -v) : 0.0;
        }
        return y;
    };
    g.lipschitz_L0 = weight;  // per coordinate; scaled by sqrt(dim) where needed
    return g;
}

// ---------------------------------------------------------------------------
// Composite problem F = f + g.
// ---------------------------------------------------------------------------

/// F = f + g with the smoothing parameter used to realize the drift of the
/// composite dynamics as grad f + grad g_lambda.
struct CompositeProblem {
    std::string name;
    SmoothObjective f;
    std::optional<NonsmoothTerm> g;
    double moreau_lambda = 1e-3;
    double min_value = 0.0;  // min of F (equals f.min_value when g absent)
    /// Closed-form minimizer of F + (eps/2)||x||^2 where available (quadratics).
    std::function<Vec(double)> reg_solver;

    int dim() const { return f.dim; }
    bool composite() const { return g.has_value(); }

    double value(const Vec& x) const {
        double v = f.eval(x);
        if (g) v += g->eval(x);
        return v;
    }
    double gap(const Vec& x) const { return value(x) - min_value; }

    /// Smoothed drift grad f + grad g_lambda; Lipschitz <= L + 1/lambda.
    Vec drift(const Vec& x) const {
        Vec d = f.grad(x);
        if (g) d += moreau_grad(*g, moreau_lambda, x);
        return d;
    }
    double drift_lipschitz() const {
        return f.lipschitz_L + (g ? 1.0 / moreau_lambda : 0.0);
    }

    bool has_projector() const { return f.has_projector(); }
    /// Minimum norm solution proj_S(0); requires a projector.
    Vec min_norm_solution() const {
        if (!has_projector()) throw ConfigError("problem has no solution projector");
        return f.solution_projector(Vec::Zero(dim()));
    }
};

// ---------------------------------------------------------------------------
// Builtin fixtures.
// ---------------------------------------------------------------------------

namespace detail {

struct QuadraticEig {
    Mat U;       // eigenvectors
    Vec lam;     // eigenvalues (ascending)
    Vec x_min;   // min-norm least-squares solution of A x = b
    double rank_tol;
};

inline QuadraticEig quadratic_decompose(const Mat& A, const Vec& b) {
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    QuadraticEig q;
    q.U = es.eigenvectors();
    q.lam = es.eigenvalues();
    const double scale = std::max(1.0, std::abs(q.lam[q.lam.size() - 1]));
    q.rank_tol = 1e-10 * scale;
    if (q.lam[0] < -q.rank_tol)
        throw ConfigError("quadratic matrix is not positive semidefinite (min eigenvalue " +
                          std::to_string(q.lam[0]) + ")");
    Vec bu = q.U.transpose() * b;
    Vec xu = Vec::Zero(b.size());
    for (int i = 0; i < b.size(); ++i) {
        if (q.lam[i] > q.rank_tol) {
            xu[i] = bu[i] / q.lam[i];
        } else if (std::abs(bu[i]) > 1e-9 * std::max(1.0, b.norm())) {
            throw ConfigError("quadratic is unbounded below: b has a null-space component");
        }
    }
    q.x_min = q.U * xu;
    return q;
}

}  // namespace detail

/// f(x) = 1/2 x^T A x - b^T x with A symmetric PSD. Solution set is the
/// affine space x_min + null(A); all verification data is exact.
inline CompositeProblem quadratic_problem(const Mat& A, const Vec& b) {
    if (A.rows() != A.cols() || A.rows() != b.size())
        throw ConfigError("quadratic problem: dimension mismatch");
    if (!A.isApprox(A.transpose(), 1e-12)) throw ConfigError("quadratic matrix must be symmetric");
    auto eig = std::make_shared<detail::QuadraticEig>(detail::quadratic_decompose(A, b));
    auto Ah = std::make_shared<Mat>(A);
    auto bh = std::make_shared<Vec>(b);

    CompositeProblem p;
    p.name = "quadratic";
    p.f.dim = static_cast<int>(A.rows());
    p.f.eval = [Ah, bh](const Vec& x) { return 0.5 * x.dot(*Ah * x) - bh->dot(x); };
    p.f.grad = [Ah, bh](const Vec& x) { return Vec(*Ah * x - *bh); };
    p.f.lipschitz_L = eig->lam[eig->lam.size() - 1];
    p.f.min_value = 0.5 * eig->x_min.dot(A * eig->x_min) - b.dot(eig->x_min);
    p.f.solution_projector = [eig](const Vec& y) {
        // S = x_min + null(A): project y - x_min onto null(A).
        Vec d = eig->U.transpose() * (y - eig->x_min);
        for (int i = 0; i < d.size(); ++i)
            if (eig->lam[i] > eig->rank_tol) d[i] = 0.0;
        return Vec(eig->x_min + eig->U * d);
    };
    double min_pos = 0.0;
    for (int i = 0; i < eig->lam.size(); ++i)
        if (eig->lam[i] > eig->rank_tol) {
            min_pos = eig->lam[i];
            break;
        }
    if (min_pos > 0.0) {
        p.f.pl_constant_mu = min_pos;
        p.f.eb_exponent_p = 2.0;
        p.f.eb_constant_kappa = 0.5 * min_pos;
    }
    p.min_value = p.f.min_value;
    p.reg_solver = [Ah, bh](double eps) {
        Mat M = *Ah;
        M.diagonal().array() += eps;
        return Vec(M.ldlt().solve(*bh));
    };
    return p;
}

inline CompositeProblem least_squares_problem(const Mat& M, const Vec& y) {
    if (M.rows() != y.size()) throw ConfigError("least squares: dimension mismatch");
    CompositeProblem p = quadratic_problem(M.transpose() * M, M.transpose() * y);
    p.name = "least_squares";
    // Report the true residual objective, shifted so verification data stays exact.
    auto Mh = std::make_shared<Mat>(M);
    auto yh = std::make_shared<Vec>(y);
    const double min_res = 0.5 * (M * p.f.solution_projector(Vec::Zero(M.cols())) - y).squaredNorm();
    p.f.eval = [Mh, yh](const Vec& x) { return 0.5 * (*Mh * x - *yh).squaredNorm(); };
    p.f.grad = [Mh, yh](const Vec& x) { return Vec(Mh->transpose() * (*Mh * x - *yh)); };
    p.f.min_value = min_res;
    p.min_value = min_res;
    return p;
}

/// Mean logistic loss sum log(1+exp(-l_i z_i.x))/m on fixed samples.
/// min_value is precomputed once by an accelerated descent run to
/// ||grad|| < 1e-10; fixtures must be non-separable so the min is attained.
inline CompositeProblem logistic_problem(const Mat& Z, const Vec& labels) {
    if (Z.rows() != labels.size()) throw ConfigError("logistic: dimension mismatch");
    const int m = static_cast<int>(Z.rows());
    auto Zh = std::make_shared<Mat>(Z);
    auto lh = std::make_shared<Vec>(labels);

    CompositeProblem p;
    p.name = "logistic";
    p.f.dim = static_cast<int>(Z.cols());
    p.f.eval = [Zh, lh, m](const Vec& x) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) {
            double u = -(*lh)[i] * Zh->row(i).dot(x);
            s += u > 30.0 ? u : std::log1p(std::exp(u));
        }
        return s / m;
    };
    p.f.grad = [Zh, lh, m](const Vec& x) {
        Vec gr = Vec::Zero(x.size());
        for (int i = 0; i < m; ++i) {
            double u = -(*lh)[i] * Zh->row(i).dot(x);
            double sgm = 1.0 / (1.0 + std::exp(-u));
            gr -= ((*lh)[i] * sgm / m) * Zh->row(i).transpose();
        }
        return gr;
    };
    Eigen::SelfAdjointEigenSolver<Mat> es(Z.transpose() * Z);
    p.f.lipschitz_L = 0.25 * es.eigenvalues().maxCoeff() / m;

    // High-accuracy minimizer by Nesterov descent with restart.
    Vec x = Vec::Zero(p.f.dim), yv = x;
    double tk = 1.0;
    const double step = 1.0 / p.f.lipschitz_L;
    Vec gr = p.f.grad(x);
    for (int it = 0; it < 200000 && gr.norm() >= 1e-10; ++it) {
        Vec xn = yv - step * p.f.grad(yv);
        double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        yv = xn + ((tk - 1.0) / tn) * (xn - x);
        if (p.f.eval(xn) > p.f.eval(x)) {  // restart
            yv = xn;
            tn = 1.0;
        }
        x = xn;
        tk = tn;
        gr = p.f.grad(x);
    }
    if (gr.norm() >= 1e-10) throw NumericError("logistic fixture: minimizer solve stalled");
    p.f.min_value = p.f.eval(x);
    auto xmin = std::make_shared<Vec>(x);
    p.f.solution_projector = [xmin](const Vec&) { return *xmin; };
    p.min_value = p.f.min_value;
    return p;
}

/// Elementwise Huber loss sum H_delta(x_i - b_i), L = 1.
inline CompositeProblem huber_problem(int dim, double delta, const Vec& center) {
    if (!(delta > 0.0)) throw ConfigError("huber: delta must be positive");
    if (center.size() != dim) throw ConfigError("huber: center dimension mismatch");
    auto ch = std::make_shared<Vec>(center);
    CompositeProblem p;
    p.name = "huber";
    p.f.dim = dim;
    p.f.eval = [ch, delta](const Vec& x) {
        double s = 0.0;
        for (int i = 0; i < x.size(); ++i) {
            double r = std::abs(x[i] - (*ch)[i]);
            s += r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
        }
        return s;
    };
    p.f.grad = [ch, delta](const Vec& x) {
        Vec gr(x.size());
        for (int i = 0; i < x.size(); ++i) {
            double r = x[i] - (*ch)[i];
            gr[i] = std::abs(r) <= delta ? r : (r > 0 ? delta : -delta);
        }
        return gr;
    };
    p.f.lipschitz_L = 1.0;
    p.f.min_value = 0.0;
    p.f.solution_projector = [ch](const Vec&) { return *ch; };
    p.min_value = 0.0;
    return p;
}

/// 1/2 ||Mx - y||^2 + w ||x||_1. min_value is cached from a proximal
/// gradient run to fixed-point tolerance 1e-12; no solution projector.
inline CompositeProblem l1_least_squares_problem(const Mat& M, const Vec& y, double weight) {
    CompositeProblem p = least_squares_problem(M, y);
    p.name = "l1_least_squares";
    p.f.solution_projector = nullptr;
    p.f.pl_constant_mu.reset();
    p.g = l1_term(weight);
    p.g->lipschitz_L0 = weight * std::sqrt(static_cast<double>(M.cols()));
    p.reg_solver = nullptr;

    const double step = 1.0 / p.f.lipschitz_L;
    Vec x = Vec::Zero(p.dim());
    for (int it = 0; it < 500000; ++it) {
        Vec xn = p.g->prox(step * 1.0, x - step * p.f.grad(x));
        double move = (xn - x).norm() / step;
        x = xn;
        if (move < 1e-12) break;
    }
    p.min_value = p.f.eval(x) + p.g->eval(x);
    return p;
}

/// Dispatch by name for config-driven construction.
inline CompositeProblem builtin_problem(const std::string& kind, const Mat& A, const Vec& b,
                                        double scalar_param = 0.0) {
    if (kind == "quadratic") return quadratic_problem(A, b);
    if (kind == "least_squares") return least_squares_problem(A, b);
    if (kind == "logistic") return logistic_problem(A, b);
    if (kind == "l1_least_squares") return l1_least_squares_problem(A, b, scalar_param);
    if (kind == "huber") return huber_problem(static_cast<int>(b.size()), scalar_param, b);
    throw ConfigError("unknown problem kind: " + kind);
}

}  // namespace sid
