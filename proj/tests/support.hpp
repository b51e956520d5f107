#pragma once

// Shared oracles and data generators for the test suites.

#include "ewhmpc/identifier.hpp"
#include "ewhmpc/mpc.hpp"

#include <Eigen/Dense>

#include <random>
#include <vector>

namespace ewhmpc::testing {

struct ArxData {
    std::vector<double> power;  // P(0..n)
    std::vector<double> delta;  // Δθ(0..n-1)
};

/// P(k+1) = a P(k) + b Δθ(k) + w + noise, with Δθ uniform in ±delta_amp and
/// switching every `hold` steps.
inline ArxData make_arx_data(const ArxEstimate& truth, int n, double p0, double delta_amp, double noise_sd,
                             std::uint64_t seed, int hold = 3)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-delta_amp, delta_amp);
    std::normal_distribution<double> e(0.0, noise_sd > 0.0 ? noise_sd : 1.0);
    ArxData d;
    d.power.push_back(p0);
    double delta = 0.0;
    for (int k = 0; k < n; ++k) {
        if (k % hold == 0) {
            delta = u(rng);
        }
        d.delta.push_back(delta);
        const double noise = noise_sd > 0.0 ? noise_sd * e(rng) : 0.0;
        d.power.push_back(predict(truth, d.power.back(), delta) + noise);
    }
    return d;
}

inline IdentifierState run_identifier(const IdentifierConfig& cfg, const ArxData& d)
{
    IdentifierState s(cfg);
    for (std::size_t k = 0; k < d.delta.size(); ++k) {
        s.update(d.power[k + 1], d.power[k], d.delta[k]);
    }
    return s;
}

/// Ordinary least squares on (P(k), Δθ(k), 1) -> P(k+1), via column-pivoting QR.
inline Eigen::Vector3d batch_least_squares(const ArxData& d)
{
    const auto n = static_cast<Eigen::Index>(d.delta.size());
    Eigen::MatrixXd phi(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        phi.row(k) << d.power[static_cast<std::size_t>(k)], d.delta[static_cast<std::size_t>(k)], 1.0;
        y(k) = d.power[static_cast<std::size_t>(k + 1)];
    }
    return phi.colPivHouseholderQr().solve(y);
}

/// Least squares with the Gaussian prior (θ0, σ0² I) and noise R2, in the
/// normalized coordinates used by the identifier. Equal to RLS with R1 = 0.
inline Eigen::Vector3d regularized_least_squares(const ArxData& d, const IdentifierConfig& cfg)
{
    const double s = cfg.power_scale_kw;
    const auto n = static_cast<Eigen::Index>(d.delta.size());
    Eigen::MatrixXd phi(n + 3, 3);
    Eigen::VectorXd y(n + 3);
    const double wd = 1.0 / std::sqrt(cfg.measurement_noise);
    for (Eigen::Index k = 0; k < n; ++k) {
        phi.row(k) << d.power[static_cast<std::size_t>(k)] / s, d.delta[static_cast<std::size_t>(k)], 1.0;
        phi.row(k) *= wd;
        y(k) = d.power[static_cast<std::size_t>(k + 1)] / s * wd;
    }
    const double wp = 1.0 / std::sqrt(cfg.prior_variance);
    const Eigen::Vector3d theta0(cfg.a0, cfg.b0 / s, cfg.w0.value_or(0.0) / s);
    phi.bottomRows(3) = Eigen::Matrix3d::Identity() * wp;
    y.tail(3) = theta0 * wp;
    Eigen::Vector3d theta = phi.colPivHouseholderQr().solve(y);
    theta(1) *= s;
    theta(2) *= s;
    return theta;
}

inline Eigen::Vector3d as_vector(const ArxEstimate& e)
{
    return {e.a, e.b, e.w};
}

inline double max_relative_error(const Eigen::Vector3d& x, const Eigen::Vector3d& ref)
{
    return ((x - ref).array().abs() / ref.array().abs().max(1e-300)).maxCoeff();
}

/// Unconstrained minimizer of the condensed MPC objective by dense normal
/// equations, built from scratch (no shared code with the solver path).
inline Eigen::VectorXd unconstrained_mpc_oracle(double p0, double prev, const ArxEstimate& m,
                                                const std::vector<double>& ref, const Weights& w,
                                                const MpcConfig& cfg)
{
    const int T = cfg.horizon_T;
    const int L = cfg.horizon_L;
    const double s = cfg.nominal_power_kw;
    const double wp = cfg.tracking_coefficient(w);
    // Stack residuals r(u) = r0 + J u; cost = Σ r².
    const int rows = (T + 1) + T + T;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(rows, L);
    Eigen::VectorXd r0 = Eigen::VectorXd::Zero(rows);
    Eigen::RowVectorXd dp = Eigen::RowVectorXd::Zero(L);
    double p = p0;
    for (int j = 0; j <= T; ++j) {
        r0(j) = std::sqrt(wp) * (p - ref[static_cast<std::size_t>(j)]) / s;
        J.row(j) = std::sqrt(wp) * dp / s;
        if (j == T) {
            break;
        }
        const int col = std::min(j, L - 1);
        dp = m.a * dp;
        dp(col) += m.b;
        p = m.a * p + m.w;
    }
    for (int j = 0; j < T; ++j) {
        J(T + 1 + j, std::min(j, L - 1)) = std::sqrt(w.setpoint);
        const int row = 2 * T + 1 + j;
        J(row, std::min(j, L - 1)) += std::sqrt(w.rate);
        if (j == 0) {
            r0(row) = -std::sqrt(w.rate) * prev;
        } else {
            J(row, std::min(j - 1, L - 1)) -= std::sqrt(w.rate);
        }
    }
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r0;
    return A.ldlt().solve(-g);
}

} // namespace ewhmpc::testing
