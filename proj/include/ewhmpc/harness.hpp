#pragma once

// Scenario orchestration: population -> flexibility profiles and margins ->
// requests resolved to ΔP* -> schedule -> adaptive closed loop on an
// independent draw realization -> metrics.

#include "ewhmpc/closed_loop.hpp"
#include "ewhmpc/exogenous.hpp"
#include "ewhmpc/flexibility.hpp"
#include "ewhmpc/metrics.hpp"
#include "ewhmpc/plant.hpp"
#include "ewhmpc/scenario.hpp"
#include "ewhmpc/scheduler.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

namespace ewhmpc {

struct ResolvedRequest {
    RequestSpec spec;
    Margins margins;
    double delta_power_kw = 0.0;
    std::size_t profile_index = 0; // into FlexResult::profiles
};

struct FlexResult {
    std::vector<FlexProfiles> profiles; // one per distinct activation minute
    std::vector<ResolvedRequest> requests;
};

struct RunResult {
    Scenario scenario;
    double nominal_power_kw = 0.0;
    FlexResult flex;
    Schedule schedule;
    LoopSeries series;
    MetricsReport metrics;
    double ape_floor_kw = 0.0;

    [[nodiscard]] const std::vector<double>& baseline_kw() const { return flex.profiles.front().baseline; }
};

/// Profiles for every distinct request start (or the whole span when there
/// are no requests) and each request's margins and resolved ΔP*.
inline FlexResult resolve_flexibility(const Scenario& scenario, const AggregatePopulation& population)
{
    std::set<int> starts;
    for (const auto& r : scenario.requests) {
        require(r.start_minute >= 0 && r.start_minute < scenario.duration_minutes,
                "request start outside the simulation span");
        starts.insert(r.start_minute);
    }
    std::vector<int> activations(starts.begin(), starts.end());
    if (activations.empty()) {
        activations.push_back(0);
    }

    FlexResult out;
    out.profiles = estimate_flex_profiles(population, scenario.climate, activations,
                                          scenario.flexibility_seed(), scenario.flexibility);
    for (const auto& r : scenario.requests) {
        ResolvedRequest q;
        q.spec = r;
        q.profile_index = static_cast<std::size_t>(
            std::find(activations.begin(), activations.end(), r.start_minute) - activations.begin());
        q.margins = margins(out.profiles[q.profile_index], r.start_minute, r.duration_minutes);
        if (r.margin_fraction_pct) {
            const double margin = r.direction == RequestDirection::down ? q.margins.downward_kw : q.margins.upward_kw;
            q.delta_power_kw = *r.margin_fraction_pct / 100.0 * margin;
        } else {
            q.delta_power_kw = *r.delta_power_kw;
        }
        out.requests.push_back(q);
    }
    return out;
}

inline Schedule schedule_for(const Scenario& scenario, const FlexResult& flex)
{
    std::vector<DrRequest> requests;
    for (const auto& q : flex.requests) {
        requests.push_back({q.spec.start_minute, q.spec.duration_minutes, q.delta_power_kw,
                            q.spec.rebound_mitigation});
    }
    return build_schedule(std::move(requests), scenario.schedule);
}

inline std::vector<ServiceWindow> service_windows(const Scenario& scenario)
{
    std::vector<ServiceWindow> out;
    for (const auto& r : scenario.requests) {
        out.push_back({r.start_minute, r.duration_minutes});
    }
    return out;
}

inline FlexResult run_flexibility(const Scenario& scenario)
{
    scenario.validate();
    const auto population = build_population(scenario.aggregate, scenario.population_seed());
    return resolve_flexibility(scenario, population);
}

inline RunResult run_scenario(const Scenario& scenario)
{
    scenario.validate();
    RunResult r;
    r.scenario = scenario;
    const auto population = build_population(scenario.aggregate, scenario.population_seed());
    r.nominal_power_kw = population.nominal_power_total_kw();
    r.flex = resolve_flexibility(scenario, population);
    r.schedule = schedule_for(scenario, r.flex);

    // The loop runs on its own draw realization, independent of the ensemble.
    const auto inputs = generate_inputs(scenario.climate, capacities(population), scenario.closed_loop_seed());
    EwhPlant plant(population, inputs, scenario.substeps);

    MpcConfig mpc = scenario.mpc;
    mpc.nominal_power_kw = r.nominal_power_kw;
    IdentifierConfig identifier = scenario.identifier;
    identifier.power_scale_kw = r.nominal_power_kw;

    LoopOptions options;
    options.minutes = scenario.duration_minutes;
    r.series = run_closed_loop(plant, r.baseline_kw(), r.schedule, identifier, mpc, options);

    MetricsOptions metrics;
    r.ape_floor_kw = scenario.metrics.ape_floor_pct_of_nominal / 100.0 * r.nominal_power_kw;
    metrics.ape_floor_kw = r.ape_floor_kw;
    metrics.transient_minutes = scenario.metrics.transient_minutes;
    metrics.rebound_window_minutes = scenario.metrics.rebound_window_minutes;
    const auto windows = service_windows(scenario);
    r.metrics = compute_metrics(r.series.power_kw, r.series.reference_kw, r.baseline_kw(), windows, metrics);
    return r;
}

} // namespace ewhmpc
