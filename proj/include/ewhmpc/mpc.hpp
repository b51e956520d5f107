#pragma once

// Receding-horizon set-point controller.
//
// Each step minimizes, over the L free moves u_0..u_{L-1} (Δθ(j) = u_{min(j, L-1)}),
//
//   Σ_{j=0}^{T-1} [ w_P e(j)² + w_θ Δθ(j)² + w_dθ (Δθ(j) - Δθ(j-1))² ] + w_P e(T)²
//
// with e(j) = (P(j) - P*(j)) / P_nom, P propagated by the frozen ARX model and
// Δθ(-1) the previously applied offset, subject to delta_min <= u <= delta_max.
// The problem is condensed to an L-variable box QP.

#include "ewhmpc/box_qp.hpp"
#include "ewhmpc/common.hpp"
#include "ewhmpc/identifier.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace ewhmpc {

struct Weights {
    double power = 0.0;    // w_P, on the squared normalized tracking error
    double setpoint = 0.0; // w_θ, per °C²
    double rate = 0.0;     // w_dθ, per °C²

    void validate() const
    {
        require(std::isfinite(power) && std::isfinite(setpoint) && std::isfinite(rate),
                "weights must be finite");
        require(power >= 0.0 && setpoint >= 0.0 && rate >= 0.0, "weights must be non-negative");
        require(power > 0.0 || setpoint > 0.0 || rate > 0.0, "at least one weight must be positive");
    }

    friend bool operator==(const Weights&, const Weights&) = default;
};

/// Set-point preservation mode: comparable weights.
inline constexpr Weights kControlMode1{50.0, 0.5, 1.0};
/// Tracking mode: power weight dominates.
inline constexpr Weights kControlMode2{5.0, 0.01, 0.001};

inline constexpr Weights lerp(const Weights& from, const Weights& to, double t) noexcept
{
    // Exact at both ends.
    return {(1.0 - t) * from.power + t * to.power,
            (1.0 - t) * from.setpoint + t * to.setpoint,
            (1.0 - t) * from.rate + t * to.rate};
}

/// How w_P multiplies the tracking error.
enum class TrackingWeightUnits {
    normalized, // w_P · ((P - P*) / P_nom)²
    per_kw,     // (w_P / P_nom) · (P - P*)², the weight read as kW⁻¹
};

struct MpcConfig {
    int horizon_T = 30;
    int horizon_L = 5;
    double delta_min = -10.0;
    double delta_max = 10.0;
    double solver_tolerance = 1e-9;
    int max_iterations = 10000;
    double nominal_power_kw = 1.0;
    TrackingWeightUnits tracking_units = TrackingWeightUnits::normalized;

    void validate() const
    {
        require(horizon_L >= 1 && horizon_L <= horizon_T, "horizons must satisfy 1 <= L <= T");
        require(std::isfinite(delta_min) && std::isfinite(delta_max) && delta_min < delta_max,
                "delta bounds must satisfy delta_min < delta_max");
        require(solver_tolerance > 0.0, "solver tolerance must be positive");
        require(max_iterations > 0, "iteration cap must be positive");
        require(nominal_power_kw > 0.0 && std::isfinite(nominal_power_kw),
                "nominal power must be positive");
    }

    /// Coefficient actually multiplied onto the squared normalized error.
    [[nodiscard]] double tracking_coefficient(const Weights& w) const noexcept
    {
        return tracking_units == TrackingWeightUnits::per_kw ? w.power * nominal_power_kw : w.power;
    }
};

struct ControlSolution {
    std::vector<double> trajectory;      // Δθ(k..k+T-1), °C
    std::vector<double> predicted_power; // P(k..k+T), kW
    double applied = 0.0;
    double cost = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Objective of an arbitrary full-length trajectory, by direct simulation.
inline double mpc_cost(double power_now_kw, double prev_delta, const ArxEstimate& model,
                       std::span<const double> reference_kw, std::span<const double> trajectory,
                       const Weights& weights, const MpcConfig& config)
{
    const int T = config.horizon_T;
    require(static_cast<int>(trajectory.size()) == T, "trajectory must have T entries");
    require(static_cast<int>(reference_kw.size()) >= T + 1, "reference must cover T + 1 samples");
    const double scale = config.nominal_power_kw;
    const double wp = config.tracking_coefficient(weights);
    double p = power_now_kw;
    double prev = prev_delta;
    double cost = 0.0;
    for (int j = 0; j < T; ++j) {
        const double e = (p - reference_kw[static_cast<std::size_t>(j)]) / scale;
        const double u = trajectory[static_cast<std::size_t>(j)];
        cost += wp * e * e + weights.setpoint * u * u + weights.rate * (u - prev) * (u - prev);
        p = predict(model, p, u);
        prev = u;
    }
    const double e = (p - reference_kw[static_cast<std::size_t>(T)]) / scale;
    return cost + wp * e * e;
}

/// Condensed quadratic objective 0.5 uᵀHu + fᵀu + constant over the L free moves.
struct CondensedQp {
    Eigen::MatrixXd H;
    Eigen::VectorXd f;
    double constant = 0.0;
    Eigen::VectorXd free_response; // normalized P(0..T) with u = 0
    Eigen::MatrixXd sensitivity;   // dP/du, normalized, (T+1)×L
};

inline CondensedQp condense_mpc(double power_now_kw, double prev_delta, const ArxEstimate& model,
                                std::span<const double> reference_kw, const Weights& weights,
                                const MpcConfig& config)
{
    const int T = config.horizon_T;
    const int L = config.horizon_L;
    const double scale = config.nominal_power_kw;
    const double b = model.b / scale;
    const double w = model.w / scale;

    CondensedQp qp;
    qp.free_response.resize(T + 1);
    qp.sensitivity = Eigen::MatrixXd::Zero(T + 1, L);
    qp.free_response(0) = power_now_kw / scale;
    for (int j = 0; j < T; ++j) {
        qp.free_response(j + 1) = model.a * qp.free_response(j) + w;
        qp.sensitivity.row(j + 1) = model.a * qp.sensitivity.row(j);
        qp.sensitivity(j + 1, std::min(j, L - 1)) += b;
    }

    Eigen::VectorXd reference(T + 1);
    for (int j = 0; j <= T; ++j) {
        reference(j) = reference_kw[static_cast<std::size_t>(j)] / scale;
    }

    // Move-blocking map and first differences of the applied trajectory.
    Eigen::MatrixXd blocking = Eigen::MatrixXd::Zero(T, L);
    for (int j = 0; j < T; ++j) {
        blocking(j, std::min(j, L - 1)) = 1.0;
    }
    Eigen::MatrixXd diff = blocking;
    diff.bottomRows(T - 1) -= blocking.topRows(T - 1);
    Eigen::VectorXd diff_offset = Eigen::VectorXd::Zero(T);
    diff_offset(0) = prev_delta;

    const double wp = config.tracking_coefficient(weights);
    const Eigen::VectorXd residual0 = qp.free_response - reference;
    qp.H = 2.0 * (wp * qp.sensitivity.transpose() * qp.sensitivity +
                  weights.setpoint * blocking.transpose() * blocking +
                  weights.rate * diff.transpose() * diff);
    qp.H = 0.5 * (qp.H + qp.H.transpose()).eval();
    qp.f = 2.0 * (wp * qp.sensitivity.transpose() * residual0 -
                  weights.rate * diff.transpose() * diff_offset);
    qp.constant = wp * residual0.squaredNorm() + weights.rate * prev_delta * prev_delta;
    return qp;
}

inline ControlSolution solve_mpc(double power_now_kw, double prev_delta, const ArxEstimate& model,
                                 std::span<const double> reference_kw, const Weights& weights,
                                 const MpcConfig& config)
{
    config.validate();
    weights.validate();
    require(model.finite(), "model coefficients must be finite");
    require_finite(power_now_kw, "measured power");
    require_finite(prev_delta, "previous set-point offset");
    require(static_cast<int>(reference_kw.size()) >= config.horizon_T + 1,
            "reference must cover k..k+T");
    for (int j = 0; j <= config.horizon_T; ++j) {
        require_finite(reference_kw[static_cast<std::size_t>(j)], "reference");
    }

    const CondensedQp qp = condense_mpc(power_now_kw, prev_delta, model, reference_kw, weights, config);
    const int L = config.horizon_L;
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(L, config.delta_min);
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(L, config.delta_max);
    const BoxQpResult r = solve_box_qp(qp.H, qp.f, lo, hi, config.solver_tolerance, config.max_iterations);

    ControlSolution sol;
    sol.trajectory.resize(static_cast<std::size_t>(config.horizon_T));
    for (int j = 0; j < config.horizon_T; ++j) {
        sol.trajectory[static_cast<std::size_t>(j)] = r.x(std::min(j, L - 1));
    }
    sol.applied = sol.trajectory.front();
    sol.cost = r.objective + qp.constant;
    sol.kkt_residual = r.kkt_residual;
    sol.iterations = r.iterations;
    sol.converged = r.converged;
    const Eigen::VectorXd p = (qp.free_response + qp.sensitivity * r.x) * config.nominal_power_kw;
    sol.predicted_power.assign(p.data(), p.data() + p.size());
    return sol;
}

/// Sequential receding-horizon loop state: remembers the last applied offset.
class Controller {
public:
    explicit Controller(MpcConfig config, double initial_delta = 0.0)
        : config_(config)
        , prev_delta_(initial_delta)
    {
        config_.validate();
    }

    /// Solves for the current minute and returns Δθ(k). A failed solve holds
    /// the previous offset and is counted.
    double step(double power_now_kw, const ArxEstimate& model,
                std::span<const double> reference_window_kw, const Weights& weights)
    {
        require(!reference_window_kw.empty(), "reference window is empty");
        try {
            last_ = solve_mpc(power_now_kw, prev_delta_, model, reference_window_kw, weights, config_);
            if (!last_.converged) {
                ++unconverged_;
            }
            prev_delta_ = last_.applied;
        } catch (const Error& e) {
            // Precondition failures on the reference are caller bugs.
            if (static_cast<int>(reference_window_kw.size()) < config_.horizon_T + 1) {
                throw;
            }
            ++failures_;
            last_error_ = e.what();
            last_ = ControlSolution{};
            last_.applied = prev_delta_;
        }
        return prev_delta_;
    }

    [[nodiscard]] double prev_delta() const noexcept { return prev_delta_; }
    [[nodiscard]] const ControlSolution& last_solution() const noexcept { return last_; }
    [[nodiscard]] const MpcConfig& config() const noexcept { return config_; }
    [[nodiscard]] int failures() const noexcept { return failures_; }
    [[nodiscard]] int unconverged() const noexcept { return unconverged_; }
    [[nodiscard]] const std::string& last_error() const noexcept { return last_error_; }

private:
    MpcConfig config_;
    double prev_delta_ = 0.0;
    ControlSolution last_;
    int failures_ = 0;
    int unconverged_ = 0;
    std::string last_error_;
};

} // namespace ewhmpc
