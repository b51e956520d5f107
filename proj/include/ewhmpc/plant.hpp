#pragma once

// Population of thermostatically controlled electric water heaters driven by a
// single broadcast set-point offset.
//
// Each tank is a fully mixed single node:
//   C dθ/dt = s P_n - U (θ - θ_amb)
// with instantaneous mixing of cold water for each draw. The thermostat is a
// two-threshold hysteresis around the effective set-point.

#include "ewhmpc/common.hpp"

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ewhmpc {

using Seconds = std::chrono::duration<double>;

/// Catalogue data of a commercial water heater model.
struct EwhModel {
    std::string name;
    double capacity_liters = 0.0;
    double nominal_power_kw = 0.0;
    double max_temperature_c = 75.0;
    double dispersion_kwh_per_day = 0.0; // standing loss with the tank at 65 °C
    double halfband_c = 2.5;             // half of the thermostat dead-band
};

inline EwhModel ariston_pro_eco_50()
{
    return {"ARISTON PRO ECO R 50 V/3", 50.0, 1.2, 75.0, 0.99, 2.5};
}

inline EwhModel ariston_pro_eco_80()
{
    return {"ARISTON PRO ECO R 80 V/3", 80.0, 1.2, 75.0, 1.35, 2.5};
}

inline EwhModel ariston_pro_eco_100()
{
    return {"ARISTON PRO ECO R 100 V/3", 100.0, 1.5, 75.0, 1.56, 2.5};
}

/// Per-device physical parameters. Use make() so the derived thermal
/// capacity and loss coefficient are consistent with the catalogue values.
struct EwhParams {
    double capacity_liters = 0.0;
    double nominal_power_kw = 0.0;
    double setpoint_c = 0.0;
    double halfband_c = 0.0;
    double max_temperature_c = 0.0;
    double dispersion_kwh_per_day = 0.0;
    double thermal_capacity_kwh_per_k = 0.0;
    double loss_coefficient_kw_per_k = 0.0;

    static EwhParams make(const EwhModel& model, double setpoint_c)
    {
        EwhParams p;
        p.capacity_liters = model.capacity_liters;
        p.nominal_power_kw = model.nominal_power_kw;
        p.setpoint_c = setpoint_c;
        p.halfband_c = model.halfband_c;
        p.max_temperature_c = model.max_temperature_c;
        p.dispersion_kwh_per_day = model.dispersion_kwh_per_day;
        p.thermal_capacity_kwh_per_k = model.capacity_liters * kWaterHeatCapacity;
        p.loss_coefficient_kw_per_k = model.dispersion_kwh_per_day /
            (24.0 * (kDispersionTankTemperature - kDispersionAmbientReference));
        p.validate();
        return p;
    }

    void validate() const
    {
        require(capacity_liters > 0.0, "capacity_liters must be positive");
        require(nominal_power_kw > 0.0, "nominal_power_kw must be positive");
        require(halfband_c > 0.0, "halfband_c must be positive");
        require(dispersion_kwh_per_day >= 0.0, "dispersion must be non-negative");
        require(setpoint_c + halfband_c <= max_temperature_c + 1e-12,
                "setpoint + halfband exceeds the maximum temperature");
    }
};

struct EwhState {
    double temperature_c = 0.0;
    bool heater_on = false;
    double effective_setpoint_c = 0.0;
};

/// Two-threshold thermostat. Thresholds are closed: reaching a threshold
/// exactly triggers the transition.
constexpr bool thermostat_update(bool heater_on, double temperature_c,
                                 double effective_setpoint_c, double halfband_c) noexcept
{
    if (temperature_c <= effective_setpoint_c - halfband_c) {
        return true;
    }
    if (temperature_c >= effective_setpoint_c + halfband_c) {
        return false;
    }
    return heater_on;
}

namespace detail {

inline EwhState advance_tank(const EwhState& state, const EwhParams& params, double ambient_c,
                             double cold_water_c, double draw_liters, double dt_hours) noexcept
{
    const double heat_kw = (state.heater_on ? params.nominal_power_kw : 0.0) -
        params.loss_coefficient_kw_per_k * (state.temperature_c - ambient_c);

    EwhState next = state;
    next.temperature_c += dt_hours * heat_kw / params.thermal_capacity_kwh_per_k;
    next.temperature_c +=
        (draw_liters / params.capacity_liters) * (cold_water_c - next.temperature_c);
    next.heater_on = thermostat_update(next.heater_on, next.temperature_c,
                                       next.effective_setpoint_c, params.halfband_c);
    return next;
}

} // namespace detail

/// Advances one tank by dt: explicit heating/loss update, then mixing of the
/// drawn volume with cold water, then a thermostat refresh.
inline EwhState tank_step(const EwhState& state, const EwhParams& params, double ambient_c,
                          double cold_water_c, double draw_liters, Seconds dt)
{
    require_finite(state.temperature_c, "temperature");
    require_finite(state.effective_setpoint_c, "effective set-point");
    require_finite(ambient_c, "ambient temperature");
    require_finite(cold_water_c, "cold water temperature");
    require_finite(draw_liters, "draw volume");
    require(dt.count() > 0.0 && std::isfinite(dt.count()), "dt must be positive");
    require(draw_liters >= 0.0 && draw_liters <= params.capacity_liters,
            "draw volume outside [0, capacity]");
    return detail::advance_tank(state, params, ambient_c, cold_water_c, draw_liters,
                                dt.count() / 3600.0);
}

/// Effective set-point after applying the broadcast offset, kept inside
/// [cold water + halfband, T_max - halfband].
inline double clamp_effective_setpoint(const EwhParams& params, double delta_c,
                                       double cold_water_c)
{
    const double upper = params.max_temperature_c - params.halfband_c;
    const double lower = std::min(cold_water_c + params.halfband_c, upper);
    return std::clamp(params.setpoint_c + delta_c, lower, upper);
}

struct Unit {
    EwhParams params;
    EwhState state;
};

class AggregatePopulation {
public:
    AggregatePopulation() = default;

    explicit AggregatePopulation(std::vector<Unit> units)
        : units_(std::move(units))
    {
        require(!units_.empty(), "population must not be empty");
        for (const auto& u : units_) {
            u.params.validate();
            nominal_power_total_kw_ += u.params.nominal_power_kw;
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return units_.size(); }
    [[nodiscard]] double nominal_power_total_kw() const noexcept { return nominal_power_total_kw_; }
    [[nodiscard]] std::span<const Unit> units() const noexcept { return units_; }
    [[nodiscard]] std::span<Unit> units() noexcept { return units_; }

    /// Power drawn right now, Σ s_i P_n,i.
    [[nodiscard]] double instantaneous_power_kw() const noexcept
    {
        double p = 0.0;
        for (const auto& u : units_) {
            p += u.state.heater_on ? u.params.nominal_power_kw : 0.0;
        }
        return p;
    }

private:
    std::vector<Unit> units_;
    double nominal_power_total_kw_ = 0.0;
};

/// Exogenous inputs for one minute. draws_liters holds one entry per unit.
struct MinuteInputs {
    double ambient_c = 20.0;
    double cold_water_c = 15.0;
    std::span<const double> draws_liters;
};

inline constexpr int kDefaultSubsteps = 6; // 10 s inside each minute

/// Applies the broadcast offset to every unit and advances the population by
/// one minute in `substeps` sub-steps. Draws are mixed in during the first
/// sub-step. Returns the mean ON-power over the minute (kW).
inline double aggregate_step(AggregatePopulation& population, double delta_setpoint_c,
                             const MinuteInputs& inputs, int substeps = kDefaultSubsteps)
{
    require(population.size() > 0, "population must not be empty");
    require_finite(delta_setpoint_c, "set-point offset");
    require(substeps >= 1, "substeps must be >= 1");
    require(inputs.draws_liters.empty() || inputs.draws_liters.size() == population.size(),
            "draw vector size must match the population");

    require_finite(inputs.ambient_c, "ambient temperature");
    require_finite(inputs.cold_water_c, "cold water temperature");

    const double dt_hours = 1.0 / 60.0 / substeps;
    double energy_kw_steps = 0.0;
    auto units = population.units();
    for (std::size_t i = 0; i < units.size(); ++i) {
        Unit& u = units[i];
        u.state.effective_setpoint_c =
            clamp_effective_setpoint(u.params, delta_setpoint_c, inputs.cold_water_c);
        // A changed set-point acts on the thermostat immediately.
        u.state.heater_on = thermostat_update(u.state.heater_on, u.state.temperature_c,
                                              u.state.effective_setpoint_c, u.params.halfband_c);
        const double draw = inputs.draws_liters.empty() ? 0.0 : inputs.draws_liters[i];
        require(draw >= 0.0 && draw <= u.params.capacity_liters, "draw volume outside [0, capacity]");
        for (int s = 0; s < substeps; ++s) {
            if (u.state.heater_on) {
                energy_kw_steps += u.params.nominal_power_kw;
            }
            u.state = detail::advance_tank(u.state, u.params, inputs.ambient_c, inputs.cold_water_c,
                                           s == 0 ? draw : 0.0, dt_hours);
        }
    }
    return energy_kw_steps / substeps;
}

// ---------------------------------------------------------------------------
// Population construction

struct UnitClass {
    EwhModel model;
    double share_percent = 100.0;
};

struct AggregateSpec {
    std::string name;
    int units = 0;
    std::vector<UnitClass> classes;
    // User-preference set-point distribution (uniform).
    double setpoint_min_c = 55.0;
    double setpoint_max_c = 65.0;
    // Ambient used to estimate the initial duty cycle of each unit.
    double initial_ambient_c = 20.0;
};

inline AggregateSpec aggregate_1()
{
    return {"Aggregate 1", 600, {{ariston_pro_eco_100(), 100.0}}, 55.0, 65.0, 20.0};
}

inline AggregateSpec aggregate_2()
{
    return {"Aggregate 2",
            600,
            {{ariston_pro_eco_50(), 22.0}, {ariston_pro_eco_80(), 60.0}, {ariston_pro_eco_100(), 18.0}},
            55.0,
            65.0,
            20.0};
}

/// Number of units per class. Largest-remainder rounding: every class gets
/// floor(N * share), the leftover units go to the largest fractional parts
/// (ties to the earlier class).
inline std::vector<int> class_counts(const AggregateSpec& spec)
{
    require(spec.units > 0, "aggregate must have at least one unit");
    require(!spec.classes.empty(), "aggregate must have at least one class");
    double total = 0.0;
    for (const auto& c : spec.classes) {
        require(c.share_percent >= 0.0 && std::isfinite(c.share_percent),
                "class shares must be non-negative");
        total += c.share_percent;
    }
    require(std::abs(total - 100.0) <= 1e-9, "class shares must sum to 100%");

    std::vector<int> counts(spec.classes.size());
    std::vector<double> remainders(spec.classes.size());
    int assigned = 0;
    for (std::size_t i = 0; i < spec.classes.size(); ++i) {
        const double exact = spec.units * spec.classes[i].share_percent / 100.0;
        // Guard against 131.99999 for an exact 132.
        const double floored = std::floor(exact + 1e-9);
        counts[i] = static_cast<int>(floored);
        remainders[i] = exact - floored;
        assigned += counts[i];
    }
    std::vector<std::size_t> order(spec.classes.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t j = 0; assigned < spec.units; ++j, ++assigned) {
        ++counts[order[j % order.size()]];
    }
    return counts;
}

/// Deterministic for a fixed seed. Initial temperatures are uniform in the
/// dead-band; the initial heater state is ON with probability equal to the
/// unit's standing-loss duty cycle, so the population starts close to its
/// no-draw equilibrium.
inline AggregatePopulation build_population(const AggregateSpec& spec, std::uint64_t seed)
{
    require(spec.setpoint_min_c <= spec.setpoint_max_c, "set-point range is inverted");
    const auto counts = class_counts(spec);

    std::mt19937_64 rng(mix_seed(seed, 0x706f70));
    std::uniform_real_distribution<double> unit01(0.0, 1.0);

    std::vector<Unit> units;
    units.reserve(static_cast<std::size_t>(spec.units));
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        const EwhModel& model = spec.classes[c].model;
        for (int n = 0; n < counts[c]; ++n) {
            double setpoint = spec.setpoint_min_c +
                (spec.setpoint_max_c - spec.setpoint_min_c) * unit01(rng);
            setpoint = std::min(setpoint, model.max_temperature_c - model.halfband_c);
            Unit u{EwhParams::make(model, setpoint), {}};
            u.state.effective_setpoint_c = setpoint;
            u.state.temperature_c = setpoint + u.params.halfband_c * (2.0 * unit01(rng) - 1.0);
            const double duty = std::clamp(u.params.loss_coefficient_kw_per_k *
                                               (setpoint - spec.initial_ambient_c) /
                                               u.params.nominal_power_kw,
                                           0.0, 1.0);
            u.state.heater_on = unit01(rng) < duty;
            units.push_back(u);
        }
    }
    return AggregatePopulation(std::move(units));
}

} // namespace ewhmpc
