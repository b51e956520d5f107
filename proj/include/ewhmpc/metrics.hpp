#pragma once

// Tracking-error indices: APE per sample, MAPE, APE_max, f_5% and the energy
// summaries used to quantify service delivery and rebound.

#include "ewhmpc/common.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

namespace ewhmpc {

/// |P - P*| / P* in percent. Samples whose reference is below `floor_kw`
/// are excluded (nullopt).
inline std::optional<double> ape(double power_kw, double reference_kw, double floor_kw = 0.0)
{
    if (!(reference_kw > floor_kw) || reference_kw == 0.0) {
        return std::nullopt;
    }
    return std::abs(power_kw - reference_kw) / reference_kw * 100.0;
}

struct ApeStats {
    double mape = 0.0;
    double ape_max = 0.0;
    double f_5 = 0.0; // % of included samples with APE > 5 %
    int included = 0;
    int excluded = 0;
};

/// Half-open minute interval [begin, end).
struct Window {
    int begin = 0;
    int end = 0;

    [[nodiscard]] bool contains(int k) const noexcept { return k >= begin && k < end; }
};

inline ApeStats ape_stats(std::span<const std::optional<double>> series,
                          std::span<const Window> skip = {})
{
    ApeStats s;
    double sum = 0.0;
    int above = 0;
    for (std::size_t k = 0; k < series.size(); ++k) {
        const int minute = static_cast<int>(k);
        if (std::any_of(skip.begin(), skip.end(), [&](const Window& w) { return w.contains(minute); })) {
            continue;
        }
        if (!series[k]) {
            ++s.excluded;
            continue;
        }
        const double v = *series[k];
        sum += v;
        s.ape_max = std::max(s.ape_max, v);
        above += v > 5.0 ? 1 : 0;
        ++s.included;
    }
    if (s.included > 0) {
        s.mape = sum / s.included;
        s.f_5 = 100.0 * above / s.included;
    }
    return s;
}

struct ServiceWindow {
    int start = 0;    // τ
    int duration = 0; // Δt
};

struct ServiceEnergy {
    int start = 0;
    int duration = 0;
    double requested_kwh = 0.0; // ∫ (P* - baseline) over the service
    double delivered_kwh = 0.0; // ∫ (P - baseline) over the service
    double rebound_kwh = 0.0;   // ∫ (P - baseline) over the window after service end
};

struct MetricsReport {
    ApeStats overall;
    ApeStats outside_transients; // first `transient` minutes after τ and after τ+Δt removed
    std::vector<std::optional<double>> ape_series;
    std::vector<ServiceEnergy> services;
};

struct MetricsOptions {
    double ape_floor_kw = 0.0;
    int transient_minutes = 15;
    int rebound_window_minutes = 60;
};

inline std::vector<Window> transient_windows(std::span<const ServiceWindow> services, int transient)
{
    std::vector<Window> out;
    for (const auto& s : services) {
        out.push_back({s.start, s.start + transient});
        out.push_back({s.start + s.duration, s.start + s.duration + transient});
    }
    return out;
}

/// Energy integrals (1-minute samples, kWh).
inline ServiceEnergy service_energy(std::span<const double> power_kw, std::span<const double> reference_kw,
                                    std::span<const double> baseline_kw, const ServiceWindow& w,
                                    int rebound_window)
{
    ServiceEnergy e{w.start, w.duration, 0.0, 0.0, 0.0};
    const int n = static_cast<int>(power_kw.size());
    for (int k = w.start; k < std::min(n, w.start + w.duration); ++k) {
        const auto i = static_cast<std::size_t>(k);
        e.requested_kwh += (reference_kw[i] - baseline_kw[i]) / 60.0;
        e.delivered_kwh += (power_kw[i] - baseline_kw[i]) / 60.0;
    }
    const int end = w.start + w.duration;
    for (int k = end; k < std::min(n, end + rebound_window); ++k) {
        const auto i = static_cast<std::size_t>(k);
        e.rebound_kwh += (power_kw[i] - baseline_kw[i]) / 60.0;
    }
    return e;
}

/// Statistics over an already computed APE series; `skip` removes minutes
/// (e.g. transients) from the statistics.
inline ApeStats compute_metrics(std::span<const std::optional<double>> ape_series,
                                std::span<const Window> skip = {})
{
    require(!ape_series.empty(), "metrics need a non-empty series");
    return ape_stats(ape_series, skip);
}

/// Full report from aligned per-minute series.
inline MetricsReport compute_metrics(std::span<const double> power_kw, std::span<const double> reference_kw,
                                     std::span<const double> baseline_kw,
                                     std::span<const ServiceWindow> services,
                                     const MetricsOptions& options = {})
{
    require(!power_kw.empty(), "metrics need a non-empty series");
    require(power_kw.size() == reference_kw.size() && power_kw.size() == baseline_kw.size(),
            "series lengths differ");
    MetricsReport r;
    r.ape_series.reserve(power_kw.size());
    for (std::size_t k = 0; k < power_kw.size(); ++k) {
        r.ape_series.push_back(ape(power_kw[k], reference_kw[k], options.ape_floor_kw));
    }
    r.overall = ape_stats(r.ape_series);
    const auto skip = transient_windows(services, options.transient_minutes);
    r.outside_transients = ape_stats(r.ape_series, skip);
    for (const auto& s : services) {
        r.services.push_back(service_energy(power_kw, reference_kw, baseline_kw, s,
                                            options.rebound_window_minutes));
    }
    return r;
}

} // namespace ewhmpc
