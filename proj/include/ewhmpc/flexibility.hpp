#pragma once

// Monte Carlo baseline / upward / downward profiles and flexibility margins.
//
// Every ensemble member uses the same population (parameters and initial
// state) and its own draw realization. The three profiles of a member share
// that realization; the policy set-points take effect at an activation minute
// and the member is identical to its baseline run before it.

#include "ewhmpc/common.hpp"
#include "ewhmpc/exogenous.hpp"
#include "ewhmpc/plant.hpp"

#include <algorithm>
#include <cstdint>
#include <span>
#include <thread>
#include <utility>
#include <vector>

namespace ewhmpc {

enum class SetpointPolicy { baseline, max, user_min };

struct FlexOptions {
    int ensemble_size = 100;
    double user_min_offset_c = 5.0; // user_min: setpoint - offset
    double user_min_floor_c = 45.0; // ... but never below this
    int substeps = kDefaultSubsteps;
    unsigned threads = 0;           // 0: hardware concurrency

    void validate() const
    {
        require(ensemble_size >= 1, "ensemble size must be >= 1");
        require(user_min_offset_c >= 0.0, "user_min offset must be non-negative");
        require(substeps >= 1, "substeps must be >= 1");
    }
};

struct FlexProfiles {
    std::vector<double> baseline;
    std::vector<double> upward;
    std::vector<double> downward;
    int ensemble_size = 0;
    int activation_minute = 0;
};

struct Margins {
    double upward_kw = 0.0;   // ΔP⁺ >= 0
    double downward_kw = 0.0; // ΔP⁻ <= 0
};

inline double policy_setpoint(const EwhParams& p, SetpointPolicy policy, const FlexOptions& options)
{
    switch (policy) {
    case SetpointPolicy::baseline:
        return p.setpoint_c;
    case SetpointPolicy::max:
        return p.max_temperature_c - p.halfband_c;
    case SetpointPolicy::user_min:
        return std::max(p.setpoint_c - options.user_min_offset_c, options.user_min_floor_c);
    }
    throw Error("invalid set-point policy");
}

/// Replaces every unit's set-point and refreshes the thermostats.
inline void apply_policy(AggregatePopulation& population, SetpointPolicy policy,
                         const FlexOptions& options)
{
    for (auto& u : population.units()) {
        u.params.setpoint_c = std::min(policy_setpoint(u.params, policy, options),
                                       u.params.max_temperature_c - u.params.halfband_c);
        u.state.effective_setpoint_c = u.params.setpoint_c;
        u.state.heater_on = thermostat_update(u.state.heater_on, u.state.temperature_c,
                                              u.state.effective_setpoint_c, u.params.halfband_c);
    }
}

/// Power series of one uncontrolled run (Δθ ≡ 0). Sample k is the power
/// at minute k: sample 0 is instantaneous, sample k+1 is the mean over minute k.
inline std::vector<double> simulate_open_loop(AggregatePopulation population, const ExogenousInputs& inputs,
                                              int substeps = kDefaultSubsteps)
{
    const int minutes = inputs.minutes();
    std::vector<double> out(static_cast<std::size_t>(minutes));
    out[0] = population.instantaneous_power_kw();
    for (int k = 0; k + 1 < minutes; ++k) {
        out[static_cast<std::size_t>(k + 1)] = aggregate_step(population, 0.0, inputs.at(k), substeps);
    }
    return out;
}

namespace detail {

inline std::uint64_t member_seed(std::uint64_t seed, int member)
{
    return mix_seed(seed, 0x466c6578ULL + static_cast<std::uint64_t>(member));
}

/// Steps `population` from minute `from` to the end, writing samples from+1..
inline void continue_run(AggregatePopulation population, const ExogenousInputs& inputs, int from,
                         int substeps, std::vector<double>& out)
{
    for (int k = from; k + 1 < inputs.minutes(); ++k) {
        out[static_cast<std::size_t>(k + 1)] = aggregate_step(population, 0.0, inputs.at(k), substeps);
    }
}

template <class Fn>
void parallel_members(int members, unsigned threads, Fn&& fn)
{
    unsigned n = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    n = std::min<unsigned>(n, static_cast<unsigned>(members));
    if (n <= 1) {
        for (int m = 0; m < members; ++m) {
            fn(m);
        }
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) {
        pool.emplace_back([&, t] {
            for (int m = static_cast<int>(t); m < members; m += static_cast<int>(n)) {
                fn(m);
            }
        });
    }
}

/// Ordered reduction to the ensemble mean.
inline std::vector<double> ensemble_mean(const std::vector<std::vector<double>>& runs)
{
    std::vector<double> mean(runs.front().size(), 0.0);
    for (const auto& r : runs) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            mean[k] += r[k];
        }
    }
    for (double& v : mean) {
        v /= static_cast<double>(runs.size());
    }
    return mean;
}

} // namespace detail

/// Per-minute ensemble mean for one policy. The policy is in force for every
/// sample from `activation_minute` on (0: the whole span), i.e. it is applied
/// at the start of minute activation_minute - 1.
inline std::vector<double> estimate_profiles(const AggregatePopulation& population,
                                             const ExogenousConfig& exogenous, SetpointPolicy policy,
                                             std::uint64_t seed, const FlexOptions& options = {},
                                             int activation_minute = 0)
{
    options.validate();
    exogenous.validate();
    require(activation_minute >= 0 && activation_minute < exogenous.minutes,
            "activation minute outside the span");
    const auto caps = capacities(population);
    std::vector<std::vector<double>> runs(static_cast<std::size_t>(options.ensemble_size));
    detail::parallel_members(options.ensemble_size, options.threads, [&](int m) {
        const auto inputs = generate_inputs(exogenous, caps, detail::member_seed(seed, m));
        AggregatePopulation pop = population;
        auto& out = runs[static_cast<std::size_t>(m)];
        out.assign(static_cast<std::size_t>(inputs.minutes()), 0.0);
        if (activation_minute == 0) {
            apply_policy(pop, policy, options);
        }
        out[0] = pop.instantaneous_power_kw();
        for (int k = 0; k + 1 < inputs.minutes(); ++k) {
            if (k + 1 == activation_minute) {
                apply_policy(pop, policy, options);
            }
            out[static_cast<std::size_t>(k + 1)] = aggregate_step(pop, 0.0, inputs.at(k), options.substeps);
        }
    });
    return detail::ensemble_mean(runs);
}

/// Baseline, upward and downward profiles sharing each member's realization.
/// Returns one FlexProfiles per activation minute (same order).
inline std::vector<FlexProfiles> estimate_flex_profiles(const AggregatePopulation& population,
                                                        const ExogenousConfig& exogenous,
                                                        std::vector<int> activation_minutes,
                                                        std::uint64_t seed,
                                                        const FlexOptions& options = {})
{
    options.validate();
    exogenous.validate();
    require(!activation_minutes.empty(), "at least one activation minute is required");
    for (int a : activation_minutes) {
        require(a >= 0 && a < exogenous.minutes, "activation minute outside the span");
    }
    const auto caps = capacities(population);
    const auto members = static_cast<std::size_t>(options.ensemble_size);
    const auto nact = activation_minutes.size();

    std::vector<std::vector<double>> base(members);
    std::vector<std::vector<std::vector<double>>> up(nact, std::vector<std::vector<double>>(members));
    std::vector<std::vector<std::vector<double>>> down(nact, std::vector<std::vector<double>>(members));

    detail::parallel_members(options.ensemble_size, options.threads, [&](int m) {
        const auto mi = static_cast<std::size_t>(m);
        const auto inputs = generate_inputs(exogenous, caps, detail::member_seed(seed, m));
        const auto minutes = static_cast<std::size_t>(inputs.minutes());
        AggregatePopulation pop = population;
        auto& b = base[mi];
        b.assign(minutes, 0.0);

        // Branches into the policy runs when the next sample is an activation.
        auto branch_at = [&](int next_sample) {
            for (std::size_t a = 0; a < nact; ++a) {
                if (activation_minutes[a] != next_sample) {
                    continue;
                }
                for (auto [policy, target] : {std::pair{SetpointPolicy::max, &up[a][mi]},
                                              std::pair{SetpointPolicy::user_min, &down[a][mi]}}) {
                    target->assign(b.begin(), b.begin() + next_sample);
                    target->resize(minutes, 0.0);
                    AggregatePopulation branch = pop;
                    apply_policy(branch, policy, options);
                    if (next_sample == 0) {
                        (*target)[0] = branch.instantaneous_power_kw();
                        detail::continue_run(std::move(branch), inputs, 0, options.substeps, *target);
                    } else {
                        detail::continue_run(std::move(branch), inputs, next_sample - 1,
                                             options.substeps, *target);
                    }
                }
            }
        };

        branch_at(0);
        b[0] = pop.instantaneous_power_kw();
        for (int k = 0; k + 1 < inputs.minutes(); ++k) {
            branch_at(k + 1);
            b[static_cast<std::size_t>(k + 1)] = aggregate_step(pop, 0.0, inputs.at(k), options.substeps);
        }
    });

    std::vector<FlexProfiles> out;
    const auto baseline = detail::ensemble_mean(base);
    for (std::size_t a = 0; a < nact; ++a) {
        FlexProfiles p;
        p.baseline = baseline;
        p.upward = detail::ensemble_mean(up[a]);
        p.downward = detail::ensemble_mean(down[a]);
        p.ensemble_size = options.ensemble_size;
        p.activation_minute = activation_minutes[a];
        out.push_back(std::move(p));
    }
    return out;
}

/// ΔP⁺ = min over [τ, τ+Δt) of (upward - baseline), floored at 0;
/// ΔP⁻ = -min over the window of (baseline - downward), floored at 0.
inline Margins margins(const FlexProfiles& profiles, int tau, int delta_t)
{
    require(delta_t > 0, "margin window must not be empty");
    const auto n = profiles.baseline.size();
    require(profiles.upward.size() == n && profiles.downward.size() == n,
            "profiles must have equal length");
    require(tau >= 0 && static_cast<std::size_t>(tau + delta_t) <= n, "window outside the profile span");
    double up = profiles.upward[static_cast<std::size_t>(tau)] - profiles.baseline[static_cast<std::size_t>(tau)];
    double down = profiles.baseline[static_cast<std::size_t>(tau)] - profiles.downward[static_cast<std::size_t>(tau)];
    for (int k = tau; k < tau + delta_t; ++k) {
        const auto i = static_cast<std::size_t>(k);
        up = std::min(up, profiles.upward[i] - profiles.baseline[i]);
        down = std::min(down, profiles.baseline[i] - profiles.downward[i]);
    }
    return {std::max(up, 0.0), -std::max(down, 0.0)};
}

} // namespace ewhmpc
