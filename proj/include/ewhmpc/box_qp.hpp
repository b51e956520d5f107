#pragma once

// Primal active-set method for small dense box-constrained convex QPs:
//
//   min 0.5 xᵀHx + fᵀx   s.t.  lo <= x <= hi
//
// H must be symmetric positive semidefinite; a tiny diagonal shift keeps the
// reduced systems solvable when it is singular.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ewhmpc {

struct BoxQpResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// ‖Π(x - g) - x‖∞ / max(1, ‖f‖∞), with g = Hx + f and Π the projection
/// onto the box. Zero exactly at the optimum.
inline double box_qp_kkt_residual(const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
                                  const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                  const Eigen::VectorXd& x)
{
    const Eigen::VectorXd g = H * x + f;
    const Eigen::VectorXd projected = (x - g).cwiseMax(lo).cwiseMin(hi);
    const double scale = std::max(1.0, f.lpNorm<Eigen::Infinity>());
    return (projected - x).lpNorm<Eigen::Infinity>() / scale;
}

inline BoxQpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
                                const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                double tolerance = 1e-10, int max_iterations = 10000)
{
    const Eigen::Index n = f.size();
    enum class Bound { free, lower, upper };

    const double shift = 1e-13 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
    auto objective = [&](const Eigen::VectorXd& x) { return 0.5 * x.dot(H * x) + f.dot(x); };

    // Start from the projection of zero, everything at a bound starts active.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n).cwiseMax(lo).cwiseMin(hi);
    std::vector<Bound> state(static_cast<std::size_t>(n), Bound::free);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (x(i) == lo(i)) {
            state[static_cast<std::size_t>(i)] = Bound::lower;
        } else if (x(i) == hi(i)) {
            state[static_cast<std::size_t>(i)] = Bound::upper;
        }
    }

    BoxQpResult best;
    best.x = x;
    best.objective = objective(x);
    best.kkt_residual = box_qp_kkt_residual(H, f, lo, hi, x);

    const double eps = 64.0 * std::numeric_limits<double>::epsilon();
    int it = 0;
    for (; it < max_iterations; ++it) {
        std::vector<Eigen::Index> free_idx;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (state[static_cast<std::size_t>(i)] == Bound::free) {
                free_idx.push_back(i);
            }
        }
        const Eigen::Index nf = static_cast<Eigen::Index>(free_idx.size());

        // Newton step on the free variables with the active ones fixed.
        Eigen::VectorXd step = Eigen::VectorXd::Zero(n);
        if (nf > 0) {
            Eigen::MatrixXd Hff(nf, nf);
            Eigen::VectorXd gf(nf);
            const Eigen::VectorXd g = H * x + f;
            for (Eigen::Index r = 0; r < nf; ++r) {
                gf(r) = g(free_idx[static_cast<std::size_t>(r)]);
                for (Eigen::Index c = 0; c < nf; ++c) {
                    Hff(r, c) = H(free_idx[static_cast<std::size_t>(r)], free_idx[static_cast<std::size_t>(c)]);
                }
            }
            Hff.diagonal().array() += shift;
            const Eigen::VectorXd df = Hff.ldlt().solve(-gf);
            for (Eigen::Index r = 0; r < nf; ++r) {
                step(free_idx[static_cast<std::size_t>(r)]) = df(r);
            }
        }

        const double step_norm = step.lpNorm<Eigen::Infinity>();
        const double x_norm = std::max(1.0, x.lpNorm<Eigen::Infinity>());
        if (step_norm <= eps * x_norm) {
            // Stationary on the working face: check multiplier signs.
            const Eigen::VectorXd g = H * x + f;
            Eigen::Index release = -1;
            double worst = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto s = state[static_cast<std::size_t>(i)];
                double violation = 0.0;
                if (s == Bound::lower && g(i) < 0.0) {
                    violation = -g(i);
                } else if (s == Bound::upper && g(i) > 0.0) {
                    violation = g(i);
                }
                if (violation > worst) {
                    worst = violation;
                    release = i;
                }
            }
            const double g_scale = std::max({1.0, f.lpNorm<Eigen::Infinity>(),
                                             H.lpNorm<Eigen::Infinity>() * x_norm});
            if (release < 0 || worst <= eps * g_scale) {
                break;
            }
            state[static_cast<std::size_t>(release)] = Bound::free;
            continue;
        }

        // Longest feasible fraction of the step.
        double alpha = 1.0;
        Eigen::Index blocking = -1;
        Bound blocking_side = Bound::free;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (state[static_cast<std::size_t>(i)] != Bound::free || step(i) == 0.0) {
                continue;
            }
            const double limit = step(i) > 0.0 ? (hi(i) - x(i)) / step(i) : (lo(i) - x(i)) / step(i);
            if (limit < alpha) {
                alpha = std::max(limit, 0.0);
                blocking = i;
                blocking_side = step(i) > 0.0 ? Bound::upper : Bound::lower;
            }
        }
        x += alpha * step;
        if (blocking >= 0) {
            x(blocking) = blocking_side == Bound::upper ? hi(blocking) : lo(blocking);
            state[static_cast<std::size_t>(blocking)] = blocking_side;
        }
        x = x.cwiseMax(lo).cwiseMin(hi);

        const double obj = objective(x);
        if (obj <= best.objective) {
            best.x = x;
            best.objective = obj;
        }
    }

    BoxQpResult result;
    result.x = x;
    result.objective = objective(x);
    result.kkt_residual = box_qp_kkt_residual(H, f, lo, hi, x);
    result.iterations = it;
    if (result.kkt_residual > tolerance && best.objective < result.objective) {
        result.x = best.x;
        result.objective = best.objective;
        result.kkt_residual = box_qp_kkt_residual(H, f, lo, hi, best.x);
    }
    result.converged = result.kkt_residual <= tolerance;
    return result;
}

} // namespace ewhmpc
