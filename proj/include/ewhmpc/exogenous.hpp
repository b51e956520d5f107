#pragma once

// Exogenous inputs at 1-minute resolution: ambient and cold-water temperature
// profiles and per-unit hot-water draws.
//
// Draws are an inhomogeneous Poisson event process per unit. The intensity
// follows a 24-hour profile (hourly weights, linearly interpolated between hour
// centres) scaled so the expected daily volume per unit equals
// daily_volume_liters. Event volumes are uniform in [event_min, event_max].

#include "ewhmpc/common.hpp"
#include "ewhmpc/plant.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace ewhmpc {

struct ExogenousConfig {
    int minutes = kMinutesPerDay;

    double ambient_mean_c = 20.0;
    double ambient_amplitude_c = 2.0;
    double ambient_peak_hour = 15.0;

    double cold_water_mean_c = 15.0;
    double cold_water_amplitude_c = 0.5;
    double cold_water_peak_hour = 17.0;

    double daily_volume_liters = 120.0;
    double event_min_liters = 5.0;
    double event_max_liters = 40.0;

    // Relative draw intensity per hour of day; peaks 7-9 and 19-22.
    std::array<double, 24> hourly_profile{0.10, 0.05, 0.05, 0.05, 0.05, 0.20, 1.00, 3.00,
                                          3.00, 1.20, 0.80, 0.80, 1.00, 1.00, 0.70, 0.60,
                                          0.60, 0.80, 1.20, 2.50, 2.80, 2.50, 1.00, 0.40};

    void validate() const
    {
        require(minutes > 0, "minutes must be positive");
        require(daily_volume_liters >= 0.0, "daily volume must be non-negative");
        require(event_min_liters > 0.0 && event_min_liters <= event_max_liters,
                "event volume range is invalid");
        double total = 0.0;
        for (double h : hourly_profile) {
            require(h >= 0.0 && std::isfinite(h), "hourly profile weights must be >= 0");
            total += h;
        }
        require(total > 0.0, "hourly profile must have positive mass");
    }
};

class ExogenousInputs {
public:
    ExogenousInputs(std::vector<double> ambient_c, std::vector<double> cold_water_c,
                    std::vector<double> draws_liters, std::size_t units)
        : ambient_c_(std::move(ambient_c))
        , cold_water_c_(std::move(cold_water_c))
        , draws_(std::move(draws_liters))
        , units_(units)
    {
        require(ambient_c_.size() == cold_water_c_.size(), "climate series lengths differ");
        require(draws_.size() == ambient_c_.size() * units_, "draw matrix has the wrong size");
    }

    [[nodiscard]] int minutes() const noexcept { return static_cast<int>(ambient_c_.size()); }
    [[nodiscard]] std::size_t units() const noexcept { return units_; }
    [[nodiscard]] std::span<const double> ambient_c() const noexcept { return ambient_c_; }
    [[nodiscard]] std::span<const double> cold_water_c() const noexcept { return cold_water_c_; }

    [[nodiscard]] std::span<const double> draws_at(int minute) const
    {
        return std::span<const double>(draws_).subspan(static_cast<std::size_t>(minute) * units_,
                                                       units_);
    }

    [[nodiscard]] MinuteInputs at(int minute) const
    {
        require(minute >= 0 && minute < minutes(), "minute outside the input span");
        const auto k = static_cast<std::size_t>(minute);
        return {ambient_c_[k], cold_water_c_[k], draws_at(minute)};
    }

    [[nodiscard]] double total_draw_liters() const
    {
        return std::accumulate(draws_.begin(), draws_.end(), 0.0);
    }

private:
    std::vector<double> ambient_c_;
    std::vector<double> cold_water_c_;
    std::vector<double> draws_; // minute-major
    std::size_t units_ = 0;
};

namespace detail {

inline double daily_sinusoid(double mean, double amplitude, double peak_hour, int minute)
{
    const double hours = minute / 60.0;
    return mean + amplitude * std::cos(2.0 * std::numbers::pi * (hours - peak_hour) / 24.0);
}

} // namespace detail

/// Relative draw intensity for each minute of the span, normalized so that
/// one day sums to 1.
inline std::vector<double> draw_intensity(const ExogenousConfig& config)
{
    config.validate();
    std::vector<double> day(kMinutesPerDay);
    for (int m = 0; m < kMinutesPerDay; ++m) {
        // Hour weights sit at hour centres.
        const double h = m / 60.0 - 0.5;
        const int lo = static_cast<int>(std::floor(h));
        const double frac = h - lo;
        const double w0 = config.hourly_profile[static_cast<std::size_t>((lo + 24) % 24)];
        const double w1 = config.hourly_profile[static_cast<std::size_t>((lo + 25) % 24)];
        day[static_cast<std::size_t>(m)] = w0 + (w1 - w0) * frac;
    }
    const double total = std::accumulate(day.begin(), day.end(), 0.0);
    std::vector<double> out(static_cast<std::size_t>(config.minutes));
    for (int m = 0; m < config.minutes; ++m) {
        out[static_cast<std::size_t>(m)] = day[static_cast<std::size_t>(m % kMinutesPerDay)] / total;
    }
    return out;
}

/// Generates one realization. Climate series are deterministic; draws depend
/// only on (config, capacities, seed).
inline ExogenousInputs generate_inputs(const ExogenousConfig& config,
                                       std::span<const double> capacities_liters,
                                       std::uint64_t seed)
{
    config.validate();
    const auto units = capacities_liters.size();
    const auto minutes = static_cast<std::size_t>(config.minutes);

    std::vector<double> ambient(minutes), cold(minutes);
    for (int m = 0; m < config.minutes; ++m) {
        ambient[static_cast<std::size_t>(m)] = detail::daily_sinusoid(
            config.ambient_mean_c, config.ambient_amplitude_c, config.ambient_peak_hour, m);
        cold[static_cast<std::size_t>(m)] = detail::daily_sinusoid(
            config.cold_water_mean_c, config.cold_water_amplitude_c, config.cold_water_peak_hour, m);
    }

    // Event times by inversion of the cumulative intensity: unit-rate
    // exponential gaps in Λ-space map to minutes through the cumulative sum.
    const auto intensity = draw_intensity(config);
    const double mean_event = 0.5 * (config.event_min_liters + config.event_max_liters);
    const double events_per_day = config.daily_volume_liters / mean_event;
    std::vector<double> cumulative(minutes);
    double acc = 0.0;
    for (std::size_t m = 0; m < minutes; ++m) {
        acc += events_per_day * intensity[m];
        cumulative[m] = acc;
    }

    std::vector<double> draws(minutes * units, 0.0);
    std::uniform_real_distribution<double> volume(config.event_min_liters, config.event_max_liters);
    std::exponential_distribution<double> gap(1.0);
    for (std::size_t u = 0; u < units; ++u) {
        std::mt19937_64 rng(mix_seed(seed, u));
        double lambda = gap(rng);
        while (acc > 0.0 && lambda < acc) {
            const auto m = static_cast<std::size_t>(
                std::upper_bound(cumulative.begin(), cumulative.end(), lambda) - cumulative.begin());
            double& cell = draws[m * units + u];
            cell = std::min(cell + volume(rng), capacities_liters[u]);
            lambda += gap(rng);
        }
    }
    return ExogenousInputs(std::move(ambient), std::move(cold), std::move(draws), units);
}

inline std::vector<double> capacities(const AggregatePopulation& population)
{
    std::vector<double> out;
    out.reserve(population.size());
    for (const auto& u : population.units()) {
        out.push_back(u.params.capacity_liters);
    }
    return out;
}

} // namespace ewhmpc
