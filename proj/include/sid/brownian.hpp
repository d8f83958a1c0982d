#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>

#include "sid/common.hpp"

namespace sid {

/// Uniform grid t_k = t_start + k h, k = 0..n_steps.
struct TimeGrid {
    double t_start = 0.0;
    double t_end = 0.0;
    double h = 0.0;

    TimeGrid() = default;
    TimeGrid(double t_start_, double t_end_, double h_)
        : t_start(t_start_), t_end(t_end_), h(h_) {
        if (!(h > 0.0)) throw ConfigError("time grid requires h > 0");
        if (!(t_end > t_start)) throw ConfigError("time grid requires t_end > t_start");
    }

    std::size_t n_steps() const {
        return static_cast<std::size_t>(std::floor((t_end - t_start) / h + 1e-9));
    }
    std::size_t n_nodes() const { return n_steps() + 1; }
    double node(std::size_t k) const { return t_start + static_cast<double>(k) * h; }
};

/// Seeded table of Brownian increments dW_k ~ N(0, h I_dim) on a grid.
/// Deterministic in (seed, dim, grid); coarsening sums increments exactly.
class BrownianPath {
  public:
    BrownianPath(int dim, TimeGrid grid, uint64_t seed)
        : dim_(dim), grid_(grid), seed_(seed) {
        if (dim <= 0) throw ConfigError("brownian path requires dim >= 1");
        const std::size_t n = grid_.n_steps();
        inc_.resize(static_cast<Eigen::Index>(n), dim);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, std::sqrt(grid_.h));
        for (std::size_t k = 0; k < n; ++k)
            for (int j = 0; j < dim; ++j) inc_(static_cast<Eigen::Index>(k), j) = normal(rng);
    }

    int dim() const { return dim_; }
    const TimeGrid& grid() const { return grid_; }
    uint64_t seed() const { return seed_; }
    std::size_t n_steps() const { return grid_.n_steps(); }

    Eigen::VectorXd increment(std::size_t k) const {
        return inc_.row(static_cast<Eigen::Index>(k)).transpose();
    }

    /// Merge groups of `factor` consecutive increments; the coarse increments
    /// reproduce the fine path at the shared nodes exactly.
    BrownianPath coarsen(std::size_t factor) const {
        if (factor == 0 || n_steps() % factor != 0)
            throw ConfigError("coarsen factor must divide the step count");
        BrownianPath out(dim_, TimeGrid(grid_.t_start, grid_.t_end, grid_.h * factor), seed_,
                         unsampled{});
        const std::size_t n = out.n_steps();
        for (std::size_t k = 0; k < n; ++k) {
            Eigen::VectorXd s = Eigen::VectorXd::Zero(dim_);
            for (std::size_t j = 0; j < factor; ++j)
                s += inc_.row(static_cast<Eigen::Index>(k * factor + j)).transpose();
            out.inc_.row(static_cast<Eigen::Index>(k)) = s.transpose();
        }
        return out;
    }

    /// Brownian-bridge refinement: splits each step into `factor` substeps
    /// whose sum reproduces the parent increment exactly.
    BrownianPath refine(std::size_t factor, uint64_t bridge_seed) const {
        if (factor == 0) throw ConfigError("refine factor must be >= 1");
        BrownianPath out(dim_, TimeGrid(grid_.t_start, grid_.t_end, grid_.h / factor),
                         bridge_seed, unsampled{});
        std::mt19937_64 rng(bridge_seed);
        const double hf = grid_.h / static_cast<double>(factor);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t k = 0; k < n_steps(); ++k) {
            // Sequential conditional sampling: given the remaining increment R
            // over m substeps, the next substep is N(R/m, hf (m-1)/m).
            Eigen::VectorXd R = increment(k);
            for (std::size_t j = 0; j < factor; ++j) {
                const double m = static_cast<double>(factor - j);
                Eigen::VectorXd d(dim_);
                if (factor - j == 1) {
                    d = R;
                } else {
                    const double sd = std::sqrt(hf * (m - 1.0) / m);
                    for (int c = 0; c < dim_; ++c) d[c] = R[c] / m + sd * normal(rng);
                }
                out.inc_.row(static_cast<Eigen::Index>(k * factor + j)) = d.transpose();
                R -= d;
            }
        }
        return out;
    }

  private:
    struct unsampled {};
    BrownianPath(int dim, TimeGrid grid, uint64_t seed, unsampled)
        : dim_(dim), grid_(grid), seed_(seed) {
        inc_.resize(static_cast<Eigen::Index>(grid_.n_steps()), dim);
    }

    int dim_;
    TimeGrid grid_;
    uint64_t seed_;
    Eigen::MatrixXd inc_;  // n_steps x dim
};

inline BrownianPath sample_brownian(int dim, const TimeGrid& grid, uint64_t seed) {
    return BrownianPath(dim, grid, seed);
}

}  // namespace sid
