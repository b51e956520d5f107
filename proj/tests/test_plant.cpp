#include "ewhmpc/exogenous.hpp"
#include "ewhmpc/plant.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace ewhmpc;

namespace {

EwhModel lossless_100()
{
    EwhModel m = ariston_pro_eco_100();
    m.dispersion_kwh_per_day = 0.0;
    return m;
}

EwhState state(double temperature, bool on, double setpoint)
{
    return {temperature, on, setpoint};
}

} // namespace

TEST(Thermostat, SwitchesOnBelowLowerThreshold)
{
    EXPECT_TRUE(thermostat_update(false, 54.9, 60.0, 2.5));
}

TEST(Thermostat, SwitchesOffAboveUpperThreshold)
{
    EXPECT_FALSE(thermostat_update(true, 63.0, 60.0, 2.5));
}

TEST(Thermostat, HoldsStateInsideDeadBand)
{
    EXPECT_TRUE(thermostat_update(true, 60.0, 60.0, 2.5));
    EXPECT_FALSE(thermostat_update(false, 60.0, 60.0, 2.5));
}

TEST(Thermostat, ThresholdsAreClosed)
{
    EXPECT_TRUE(thermostat_update(false, 57.5, 60.0, 2.5));
    EXPECT_FALSE(thermostat_update(true, 62.5, 60.0, 2.5));
}

TEST(EwhParams, DerivedCoefficients)
{
    const auto p = EwhParams::make(ariston_pro_eco_100(), 60.0);
    EXPECT_DOUBLE_EQ(p.thermal_capacity_kwh_per_k, 0.1163);
    EXPECT_DOUBLE_EQ(p.loss_coefficient_kw_per_k, 1.56 / (24.0 * 45.0));
}

TEST(EwhParams, RejectsSetpointAboveMaximum)
{
    EXPECT_THROW(EwhParams::make(ariston_pro_eco_100(), 73.0), Error);
}

TEST(TankStep, EquilibriumWhenOffAtAmbient)
{
    const auto p = EwhParams::make(ariston_pro_eco_100(), 60.0);
    const auto s = tank_step(state(40.0, false, 60.0 + 30.0), p, 40.0, 15.0, 0.0, Seconds(60.0));
    EXPECT_DOUBLE_EQ(s.temperature_c, 40.0);
}

TEST(TankStep, HeatingMatchesFineStepIntegration)
{
    const auto p = EwhParams::make(lossless_100(), 60.0);
    const auto s = tank_step(state(50.0, true, 60.0), p, 20.0, 15.0, 0.0, Seconds(60.0));

    // Independent oracle: 60000 forward steps of C dθ/dt = P over one minute.
    double theta = 50.0;
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
        theta += (1.0 / 60.0 / n) * 1.5 / 0.1163;
    }
    EXPECT_NEAR(s.temperature_c - 50.0, theta - 50.0, 1e-9);
    EXPECT_NEAR(s.temperature_c - 50.0, 0.215, 5e-4);
    EXPECT_TRUE(s.heater_on);
}

TEST(TankStep, FullCapacityDrawReplacesContents)
{
    const auto p = EwhParams::make(ariston_pro_eco_100(), 60.0);
    const auto s = tank_step(state(61.0, false, 60.0), p, 61.0, 12.0, 100.0, Seconds(60.0));
    EXPECT_NEAR(s.temperature_c, 12.0, 1e-12);
    EXPECT_TRUE(s.heater_on);
}

TEST(TankStep, RejectsBadInputs)
{
    const auto p = EwhParams::make(ariston_pro_eco_100(), 60.0);
    const auto s = state(60.0, false, 60.0);
    EXPECT_THROW(tank_step(s, p, 20.0, 15.0, 101.0, Seconds(60.0)), Error);
    EXPECT_THROW(tank_step(s, p, 20.0, 15.0, -1.0, Seconds(60.0)), Error);
    EXPECT_THROW(tank_step(s, p, 20.0, 15.0, 0.0, Seconds(0.0)), Error);
    EXPECT_THROW(tank_step(s, p, std::nan(""), 15.0, 0.0, Seconds(60.0)), Error);
}

TEST(SetpointClamp, StaysWithinPhysicalRange)
{
    const auto p = EwhParams::make(ariston_pro_eco_100(), 60.0);
    EXPECT_DOUBLE_EQ(clamp_effective_setpoint(p, 0.0, 15.0), 60.0);
    EXPECT_DOUBLE_EQ(clamp_effective_setpoint(p, 20.0, 15.0), 72.5);
    EXPECT_DOUBLE_EQ(clamp_effective_setpoint(p, -100.0, 15.0), 17.5);
    EXPECT_DOUBLE_EQ(clamp_effective_setpoint(p, -3.0, 15.0), 57.0);
}

TEST(AggregateStep, AllOffWithoutCrossingGivesZero)
{
    AggregatePopulation pop = build_population(aggregate_1(), 3);
    for (auto& u : pop.units()) {
        u.state.heater_on = false;
        u.state.temperature_c = u.params.setpoint_c + 1.0;
    }
    EXPECT_EQ(aggregate_step(pop, 0.0, MinuteInputs{20.0, 15.0, {}}), 0.0);
}

TEST(AggregateStep, Aggregate1AllOnDrawsNominalPower)
{
    AggregatePopulation pop = build_population(aggregate_1(), 3);
    for (auto& u : pop.units()) {
        u.state.heater_on = true;
        u.state.temperature_c = u.params.setpoint_c - 2.0;
    }
    EXPECT_DOUBLE_EQ(aggregate_step(pop, 0.0, MinuteInputs{20.0, 15.0, {}}), 900.0);
}

TEST(AggregateStep, Aggregate2AllOnDrawsNominalPower)
{
    AggregatePopulation pop = build_population(aggregate_2(), 3);
    for (auto& u : pop.units()) {
        u.state.heater_on = true;
        u.state.temperature_c = u.params.setpoint_c - 2.0;
    }
    EXPECT_NEAR(aggregate_step(pop, 0.0, MinuteInputs{20.0, 15.0, {}}), 752.4, 1e-9);
}

TEST(AggregateStep, RejectsBadInputs)
{
    AggregatePopulation pop = build_population(aggregate_1(), 3);
    EXPECT_THROW(aggregate_step(pop, std::nan(""), MinuteInputs{}), Error);
    EXPECT_THROW(aggregate_step(pop, 0.0, MinuteInputs{}, 0), Error);
    const std::vector<double> short_draws(10, 0.0);
    EXPECT_THROW(aggregate_step(pop, 0.0, MinuteInputs{20.0, 15.0, short_draws}), Error);
}

TEST(AggregateStep, SetpointDropSwitchesUnitsOffImmediately)
{
    AggregatePopulation pop = build_population(aggregate_1(), 3);
    for (auto& u : pop.units()) {
        u.state.heater_on = true;
        u.state.temperature_c = u.params.setpoint_c;
    }
    // Δθ = -5 puts every unit at or above its new upper threshold.
    EXPECT_EQ(aggregate_step(pop, -5.0, MinuteInputs{20.0, 15.0, {}}), 0.0);
}

TEST(Population, Aggregate1Totals)
{
    const auto pop = build_population(aggregate_1(), 1);
    EXPECT_EQ(pop.size(), 600u);
    EXPECT_DOUBLE_EQ(pop.nominal_power_total_kw(), 900.0);
}

TEST(Population, Aggregate2ClassCountsAndTotal)
{
    EXPECT_EQ(class_counts(aggregate_2()), (std::vector<int>{132, 360, 108}));
    const auto pop = build_population(aggregate_2(), 1);
    EXPECT_EQ(pop.size(), 600u);
    EXPECT_NEAR(pop.nominal_power_total_kw(), 752.4, 1e-9);
}

TEST(Population, LargestRemainderRounding)
{
    AggregateSpec spec = aggregate_2();
    spec.units = 7; // exact 1.54 / 4.2 / 1.26
    EXPECT_EQ(class_counts(spec), (std::vector<int>{2, 4, 1}));
    spec.units = 1;
    EXPECT_EQ(class_counts(spec), (std::vector<int>{0, 1, 0}));
}

TEST(Population, RejectsBadShares)
{
    AggregateSpec spec = aggregate_2();
    spec.classes[0].share_percent = 30.0;
    EXPECT_THROW(class_counts(spec), Error);
    spec = aggregate_1();
    spec.units = 0;
    EXPECT_THROW(build_population(spec, 1), Error);
}

TEST(Population, SameSeedSamePopulation)
{
    const auto a = build_population(aggregate_2(), 42);
    const auto b = build_population(aggregate_2(), 42);
    const auto c = build_population(aggregate_2(), 43);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.units()[i].params.setpoint_c, b.units()[i].params.setpoint_c);
        EXPECT_EQ(a.units()[i].state.temperature_c, b.units()[i].state.temperature_c);
        EXPECT_EQ(a.units()[i].state.heater_on, b.units()[i].state.heater_on);
        differs |= a.units()[i].params.setpoint_c != c.units()[i].params.setpoint_c;
    }
    EXPECT_TRUE(differs);
}

TEST(Population, InitialStatesInsideDeadBand)
{
    const auto pop = build_population(aggregate_2(), 5);
    for (const auto& u : pop.units()) {
        EXPECT_GE(u.params.setpoint_c, 55.0);
        EXPECT_LE(u.params.setpoint_c, 65.0);
        EXPECT_LE(std::abs(u.state.temperature_c - u.params.setpoint_c), u.params.halfband_c);
        EXPECT_EQ(u.state.effective_setpoint_c, u.params.setpoint_c);
    }
}

TEST(Population, SameInputsSamePowerSeries)
{
    ExogenousConfig cfg;
    cfg.minutes = 120;
    const auto pop = build_population(aggregate_1(), 9);
    const auto inputs = generate_inputs(cfg, capacities(pop), 11);
    auto run = [&] {
        AggregatePopulation p = pop;
        std::vector<double> out;
        for (int k = 0; k < cfg.minutes; ++k) {
            out.push_back(aggregate_step(p, k % 7 == 0 ? -1.0 : 0.5, inputs.at(k)));
        }
        return out;
    };
    EXPECT_EQ(run(), run());
}
