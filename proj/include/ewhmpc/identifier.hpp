#pragma once

// Recursive estimation of the scalar time-varying ARX model
//
//   P(k+1) = a(k) P(k) + b(k) Δθ(k) + w(k)
//
// Kalman-form recursive least squares on θ = (a, b, w) with regressor
// φ = (P(k), Δθ(k), 1). Powers are divided by a fixed scale (normally the
// aggregate nominal power) before regression; ArxEstimate is always in kW.
// With zero process noise this is ordinary RLS ("infinite memory"); a small
// diagonal process noise lets the estimate track drifting coefficients.

#include "ewhmpc/common.hpp"

#include <Eigen/Dense>

#include <optional>

namespace ewhmpc {

struct ArxEstimate {
    double a = 0.0; // dimensionless
    double b = 0.0; // kW/°C
    double w = 0.0; // kW

    [[nodiscard]] bool finite() const noexcept
    {
        return std::isfinite(a) && std::isfinite(b) && std::isfinite(w);
    }

    friend bool operator==(const ArxEstimate&, const ArxEstimate&) = default;
};

/// One-step prediction a P + b Δθ + w.
constexpr double predict(const ArxEstimate& model, double power_kw, double delta_c) noexcept
{
    return model.a * power_kw + model.b * delta_c + model.w;
}

struct IdentifierConfig {
    double a0 = 0.9;
    double b0 = 0.0;                    // kW/°C
    std::optional<double> w0;           // kW; unset: first P × (1 - a0)
    double prior_variance = 1e4;        // σ0², normalized units
    Eigen::Vector3d process_noise = Eigen::Vector3d::Constant(1e-6); // diag R1
    double measurement_noise = 1e-4;    // R2
    double power_scale_kw = 1.0;        // normalization

    void validate() const
    {
        require(std::isfinite(a0) && std::isfinite(b0), "initial estimate must be finite");
        require(!w0 || std::isfinite(*w0), "initial w must be finite");
        require(prior_variance > 0.0 && std::isfinite(prior_variance),
                "prior variance must be positive");
        require(process_noise.allFinite() && (process_noise.array() >= 0.0).all(),
                "process noise must be non-negative");
        require(measurement_noise > 0.0 && std::isfinite(measurement_noise),
                "measurement noise must be positive");
        require(power_scale_kw > 0.0 && std::isfinite(power_scale_kw),
                "power scale must be positive");
    }

    friend bool operator==(const IdentifierConfig&, const IdentifierConfig&) = default;
};

class IdentifierState {
public:
    explicit IdentifierState(const IdentifierConfig& config)
        : config_(config)
    {
        config_.validate();
        theta_ << config_.a0, config_.b0 / config_.power_scale_kw,
            config_.w0 ? *config_.w0 / config_.power_scale_kw : 0.0;
        covariance_ = Eigen::Matrix3d::Identity() * config_.prior_variance;
        disturbance_seeded_ = config_.w0.has_value();
    }

    /// Sets w from the first observed power when no w0 was configured.
    void seed_disturbance(double first_power_kw)
    {
        require_finite(first_power_kw, "first observed power");
        if (!disturbance_seeded_) {
            theta_(2) = first_power_kw / config_.power_scale_kw * (1.0 - theta_(0));
            disturbance_seeded_ = true;
        }
    }

    /// One RLS step with measurement y = P(k+1) and regressor (P(k), Δθ(k)).
    void update(double next_power_kw, double power_kw, double delta_c)
    {
        require_finite(next_power_kw, "measured power");
        require_finite(power_kw, "regressor power");
        require_finite(delta_c, "regressor set-point offset");
        if (!disturbance_seeded_) {
            seed_disturbance(power_kw);
        }

        const double scale = config_.power_scale_kw;
        const Eigen::Vector3d phi(power_kw / scale, delta_c, 1.0);
        const double y = next_power_kw / scale;

        const Eigen::Vector3d c_phi = covariance_ * phi;
        const double denom = config_.measurement_noise + phi.dot(c_phi);
        const double innovation = y - phi.dot(theta_);
        require(std::isfinite(innovation) && std::isfinite(denom), "non-finite innovation");

        const Eigen::Vector3d gain = c_phi / denom;
        theta_ += gain * innovation;
        covariance_ -= gain * c_phi.transpose();
        covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();
        covariance_.diagonal() += config_.process_noise;
        ++updates_;
    }

    [[nodiscard]] ArxEstimate estimate() const noexcept
    {
        const double scale = config_.power_scale_kw;
        return {theta_(0), theta_(1) * scale, theta_(2) * scale};
    }

    /// Covariance of the normalized parameter vector (a, b/scale, w/scale).
    [[nodiscard]] const Eigen::Matrix3d& covariance() const noexcept { return covariance_; }
    [[nodiscard]] const IdentifierConfig& config() const noexcept { return config_; }
    [[nodiscard]] long updates() const noexcept { return updates_; }
    [[nodiscard]] bool disturbance_seeded() const noexcept { return disturbance_seeded_; }

private:
    IdentifierConfig config_;
    Eigen::Vector3d theta_;
    Eigen::Matrix3d covariance_;
    bool disturbance_seeded_ = false;
    long updates_ = 0;
};

inline IdentifierState identifier_init(const IdentifierConfig& config)
{
    return IdentifierState(config);
}

} // namespace ewhmpc
