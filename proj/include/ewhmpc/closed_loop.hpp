#pragma once

// Adaptive closed loop: measure P(k) -> update the ARX estimate with
// (P(k), P(k-1), Δθ(k-1)) -> reference window and weights from the schedule
// -> receding-horizon solve -> broadcast Δθ(k) for minute k.
//
// The controller only ever sees the measured aggregate power and its own past
// outputs; the plant is any type modelling PowerPlant.

#include "ewhmpc/exogenous.hpp"
#include "ewhmpc/identifier.hpp"
#include "ewhmpc/mpc.hpp"
#include "ewhmpc/plant.hpp"
#include "ewhmpc/scheduler.hpp"

#include <concepts>
#include <span>
#include <vector>

namespace ewhmpc {

template <class P>
concept PowerPlant = requires(P plant, double delta, int minute) {
    { plant.initial_power_kw() } -> std::convertible_to<double>;
    { plant.step(delta, minute) } -> std::convertible_to<double>;
};

/// The EWH population driven by one exogenous realization.
class EwhPlant {
public:
    EwhPlant(AggregatePopulation population, const ExogenousInputs& inputs,
             int substeps = kDefaultSubsteps)
        : population_(std::move(population))
        , inputs_(&inputs)
        , substeps_(substeps)
    {
    }

    [[nodiscard]] double initial_power_kw() const noexcept { return population_.instantaneous_power_kw(); }

    double step(double delta_c, int minute)
    {
        return aggregate_step(population_, delta_c, inputs_->at(minute), substeps_);
    }

    [[nodiscard]] const AggregatePopulation& population() const noexcept { return population_; }

private:
    AggregatePopulation population_;
    const ExogenousInputs* inputs_;
    int substeps_;
};

/// A plant that is exactly the ARX model with fixed coefficients.
class ArxPlant {
public:
    ArxPlant(ArxEstimate truth, double initial_power_kw)
        : truth_(truth)
        , power_(initial_power_kw)
    {
    }

    [[nodiscard]] double initial_power_kw() const noexcept { return power_; }

    double step(double delta_c, int /*minute*/)
    {
        power_ = predict(truth_, power_, delta_c);
        return power_;
    }

private:
    ArxEstimate truth_;
    double power_;
};

struct LoopSeries {
    std::vector<double> power_kw;
    std::vector<double> reference_kw;
    std::vector<double> delta_c;
    std::vector<double> predicted_kw; // one-step prediction made at k-1 for k
    std::vector<ArxEstimate> estimates;
    std::vector<double> cost;
    std::vector<double> kkt_residual;
    int solver_failures = 0;
    int solver_unconverged = 0;
};

struct LoopOptions {
    int minutes = kMinutesPerDay;
    // When set, the controller uses this model instead of the identifier.
    std::optional<ArxEstimate> fixed_model;
};

template <PowerPlant Plant>
LoopSeries run_closed_loop(Plant& plant, std::span<const double> baseline_kw, const Schedule& schedule,
                           const IdentifierConfig& identifier_config, const MpcConfig& mpc_config,
                           const LoopOptions& options = {})
{
    require(options.minutes > 0, "loop length must be positive");
    IdentifierState identifier(identifier_config);
    Controller controller(mpc_config);

    const auto n = static_cast<std::size_t>(options.minutes);
    LoopSeries s;
    s.power_kw.resize(n);
    s.reference_kw.resize(n);
    s.delta_c.resize(n);
    s.predicted_kw.resize(n);
    s.estimates.resize(n);
    s.cost.resize(n);
    s.kkt_residual.resize(n);

    double power = plant.initial_power_kw();
    identifier.seed_disturbance(power);
    s.predicted_kw[0] = power;
    for (int k = 0; k < options.minutes; ++k) {
        const auto i = static_cast<std::size_t>(k);
        s.power_kw[i] = power;
        if (k > 0) {
            identifier.update(power, s.power_kw[i - 1], s.delta_c[i - 1]);
        }
        const ArxEstimate model = options.fixed_model ? *options.fixed_model : identifier.estimate();
        s.estimates[i] = model;

        const auto window = reference_window(k, mpc_config.horizon_T, baseline_kw, schedule);
        s.reference_kw[i] = window.front();
        const double delta = controller.step(power, model, window, weights_at(k, schedule));
        s.delta_c[i] = delta;
        s.cost[i] = controller.last_solution().cost;
        s.kkt_residual[i] = controller.last_solution().kkt_residual;

        if (k + 1 < options.minutes) {
            s.predicted_kw[i + 1] = predict(model, power, delta);
            power = plant.step(delta, k);
        }
    }
    s.solver_failures = controller.failures();
    s.solver_unconverged = controller.unconverged();
    return s;
}

} // namespace ewhmpc
