#pragma once

// Reference signal and control-mode weights per minute.
//
// Reference: baseline outside services; baseline + ΔP* on the plateau; 5-minute
// linear ramps starting at τ and at τ + Δt.
//
// Weights: CM1 far from services, blended linearly to CM2 over the 5 minutes
// before τ, CM2 during the service. At service end either a 5-minute blend
// back to CM1, or (rebound mitigation) CM2 held for Δt followed by a 60-minute
// blend back.

#include "ewhmpc/common.hpp"
#include "ewhmpc/mpc.hpp"

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace ewhmpc {

struct DrRequest {
    int start_minute = 0;       // τ
    int duration_minutes = 0;   // Δt
    double delta_power_kw = 0.0; // ΔP*, negative for downward
    bool rebound_mitigation = false;

    friend bool operator==(const DrRequest&, const DrRequest&) = default;
};

struct ModeSchedule {
    Weights cm1 = kControlMode1;
    Weights cm2 = kControlMode2;
    int reference_ramp_minutes = 5;
    int mode_ramp_minutes = 5;
    int rebound_ramp_minutes = 60;
    bool truncate_rebound_hold = false;
    int day_minutes = kMinutesPerDay;

    void validate() const
    {
        cm1.validate();
        cm2.validate();
        require(reference_ramp_minutes > 0 && mode_ramp_minutes > 0 && rebound_ramp_minutes > 0,
                "ramp durations must be positive");
        require(day_minutes > 0, "day length must be positive");
    }
};

/// One validated request with its precomputed weight timeline.
struct ScheduledService {
    DrRequest request;
    int blend_in_start = 0;  // CM1 -> CM2 begins
    int service_end = 0;     // τ + Δt
    int hold_end = 0;        // CM2 -> CM1 begins
    int blend_out_end = 0;   // back at CM1
    int hold_truncated_by = 0;
};

struct Breakpoint {
    int minute = 0;
    std::string label;
};

class Schedule {
public:
    Schedule() = default;

    /// Validates ordering, durations, day bounds and footprint overlaps.
    Schedule(std::vector<DrRequest> requests, ModeSchedule options)
        : options_(std::move(options))
    {
        options_.validate();
        for (std::size_t i = 0; i < requests.size(); ++i) {
            const auto& r = requests[i];
            require(r.duration_minutes >= 15 && r.duration_minutes <= 180,
                    "service duration must be within [15, 180] minutes");
            require(r.start_minute >= 0 && r.start_minute + r.duration_minutes <= options_.day_minutes,
                    "service window must lie within the simulation day");
            require(std::isfinite(r.delta_power_kw), "requested power variation must be finite");
            if (i > 0) {
                require(requests[i - 1].start_minute < r.start_minute, "requests must be sorted by start");
            }
        }
        for (std::size_t i = 0; i < requests.size(); ++i) {
            const auto& r = requests[i];
            ScheduledService s;
            s.request = r;
            s.blend_in_start = r.start_minute - options_.mode_ramp_minutes;
            s.service_end = r.start_minute + r.duration_minutes;
            const int ramp_out = r.rebound_mitigation ? options_.rebound_ramp_minutes
                                                      : options_.mode_ramp_minutes;
            int hold = r.rebound_mitigation ? r.duration_minutes : 0;
            const int reference_end = s.service_end + options_.reference_ramp_minutes;
            if (i + 1 < requests.size()) {
                const int next_start = requests[i + 1].start_minute - options_.mode_ramp_minutes;
                const int needed = s.service_end + hold + ramp_out;
                if (needed > next_start && hold > 0 && options_.truncate_rebound_hold) {
                    const int shortened = std::max(0, next_start - ramp_out - s.service_end);
                    s.hold_truncated_by = hold - shortened;
                    hold = shortened;
                    warnings_.push_back("rebound hold of request at minute " +
                                        std::to_string(r.start_minute) + " truncated by " +
                                        std::to_string(s.hold_truncated_by) + " min");
                }
                require(s.service_end + hold + ramp_out <= next_start &&
                            reference_end <= requests[i + 1].start_minute,
                        "requests overlap (including ramps and rebound hold)");
            }
            s.hold_end = s.service_end + hold;
            s.blend_out_end = s.hold_end + ramp_out;
            services_.push_back(s);
        }
    }

    [[nodiscard]] std::span<const ScheduledService> services() const noexcept { return services_; }
    [[nodiscard]] const ModeSchedule& options() const noexcept { return options_; }
    [[nodiscard]] const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    /// Fraction of the requested variation active at minute k (0 off, 1 plateau).
    [[nodiscard]] double service_level(double k) const noexcept
    {
        const double ramp = options_.reference_ramp_minutes;
        for (const auto& s : services_) {
            const double tau = s.request.start_minute;
            const double up = std::clamp((k - tau) / ramp, 0.0, 1.0);
            const double down = std::clamp((k - s.service_end) / ramp, 0.0, 1.0);
            if (up - down > 0.0) {
                return up - down;
            }
        }
        return 0.0;
    }

    /// Requested variation in kW at minute k (0 outside services).
    [[nodiscard]] double requested_delta_kw(double k) const noexcept
    {
        const double ramp = options_.reference_ramp_minutes;
        for (const auto& s : services_) {
            const double tau = s.request.start_minute;
            const double up = std::clamp((k - tau) / ramp, 0.0, 1.0);
            const double down = std::clamp((k - s.service_end) / ramp, 0.0, 1.0);
            if (up - down > 0.0) {
                return (up - down) * s.request.delta_power_kw;
            }
        }
        return 0.0;
    }

    /// Blend factor between CM1 (0) and CM2 (1) at minute k.
    [[nodiscard]] double mode_blend(double k) const noexcept
    {
        double alpha = 0.0;
        for (const auto& s : services_) {
            double a = 0.0;
            const double tau = s.request.start_minute;
            if (k >= s.blend_in_start && k < tau) {
                a = (k - s.blend_in_start) / (tau - s.blend_in_start);
            } else if (k >= tau && k <= s.hold_end) {
                a = 1.0;
            } else if (k > s.hold_end && k < s.blend_out_end) {
                a = 1.0 - (k - s.hold_end) / double(s.blend_out_end - s.hold_end);
            }
            alpha = std::max(alpha, a);
        }
        return alpha;
    }

    /// Minutes where the weight blend changes slope, in order.
    [[nodiscard]] std::vector<int> weight_breakpoints() const
    {
        std::vector<int> out;
        for (const auto& s : services_) {
            out.insert(out.end(), {s.blend_in_start, s.request.start_minute, s.hold_end, s.blend_out_end});
        }
        return out;
    }

    [[nodiscard]] std::vector<Breakpoint> breakpoints() const
    {
        std::vector<Breakpoint> out;
        const int ramp = options_.reference_ramp_minutes;
        for (const auto& s : services_) {
            const int tau = s.request.start_minute;
            out.push_back({s.blend_in_start, "cm_blend_in_start"});
            out.push_back({tau, "service_start"});
            out.push_back({tau + ramp, "reference_plateau_start"});
            out.push_back({s.service_end, "service_end"});
            out.push_back({s.service_end + ramp, "reference_ramp_end"});
            if (s.hold_end != s.service_end) {
                out.push_back({s.hold_end, "rebound_hold_end"});
            }
            out.push_back({s.blend_out_end, "cm_blend_out_end"});
        }
        std::stable_sort(out.begin(), out.end(),
                         [](const Breakpoint& a, const Breakpoint& b) { return a.minute < b.minute; });
        return out;
    }

private:
    ModeSchedule options_;
    std::vector<ScheduledService> services_;
    std::vector<std::string> warnings_;
};

inline Schedule build_schedule(std::vector<DrRequest> requests, const ModeSchedule& options = {})
{
    return Schedule(std::move(requests), options);
}

/// P*(k). Minutes past the end of the baseline reuse its last sample.
inline double reference_at(int k, std::span<const double> baseline_kw, const Schedule& schedule)
{
    require(!baseline_kw.empty(), "baseline must not be empty");
    require(k >= 0, "minute must be non-negative");
    const auto idx = std::min(static_cast<std::size_t>(k), baseline_kw.size() - 1);
    return baseline_kw[idx] + schedule.requested_delta_kw(k);
}

inline Weights weights_at(int k, const Schedule& schedule)
{
    const auto& o = schedule.options();
    return lerp(o.cm1, o.cm2, schedule.mode_blend(k));
}

/// Reference samples k..k+T for the controller.
inline std::vector<double> reference_window(int k, int horizon_T, std::span<const double> baseline_kw,
                                            const Schedule& schedule)
{
    std::vector<double> out(static_cast<std::size_t>(horizon_T + 1));
    for (int j = 0; j <= horizon_T; ++j) {
        out[static_cast<std::size_t>(j)] = reference_at(k + j, baseline_kw, schedule);
    }
    return out;
}

} // namespace ewhmpc
