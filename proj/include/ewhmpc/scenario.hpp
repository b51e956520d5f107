#pragma once

// Scenario files: one JSON document per run. Every physical quantity carries
// its unit in the key name. Missing keys take defaults; unknown keys are
// rejected. `to_json` writes the fully materialized scenario, which parses
// back to the same object.

#include "ewhmpc/common.hpp"
#include "ewhmpc/exogenous.hpp"
#include "ewhmpc/flexibility.hpp"
#include "ewhmpc/identifier.hpp"
#include "ewhmpc/mpc.hpp"
#include "ewhmpc/plant.hpp"
#include "ewhmpc/scheduler.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace ewhmpc {

using Json = nlohmann::ordered_json;

enum class RequestDirection { down, up };

/// A request as written in the scenario: either an absolute ΔP* or a
/// percentage of the flexibility margin in the given direction.
struct RequestSpec {
    int start_minute = 0;
    int duration_minutes = 0;
    RequestDirection direction = RequestDirection::down;
    std::optional<double> margin_fraction_pct;
    std::optional<double> delta_power_kw;
    bool rebound_mitigation = false;

    friend bool operator==(const RequestSpec&, const RequestSpec&) = default;
};

struct MetricsSettings {
    double ape_floor_pct_of_nominal = 1.0;
    int transient_minutes = 15;
    int rebound_window_minutes = 60;

    friend bool operator==(const MetricsSettings&, const MetricsSettings&) = default;
};

/// Identifier defaults used by the closed loop. They differ from the bare
/// IdentifierConfig defaults: with b0 = 0 the controller never moves and b is
/// never excited, so the loop starts from a positive gain prior instead.
struct ClosedLoopIdentifier {
    static constexpr double a0 = 0.85;
    static constexpr double b0_per_nominal = 1.0 / 6.0; // b0 = P_nom / 6 per °C
    static constexpr double prior_variance = 1e-4;
    static constexpr std::array<double, 3> process_noise{1e-9, 1e-7, 3e-5};
    static constexpr double measurement_noise = 1e-4;
};

struct Scenario {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    int duration_minutes = kMinutesPerDay;
    AggregateSpec aggregate = aggregate_1();
    ExogenousConfig climate;
    int substeps = kDefaultSubsteps;
    std::vector<RequestSpec> requests;
    ModeSchedule schedule;
    MpcConfig mpc;
    IdentifierConfig identifier;
    FlexOptions flexibility;
    MetricsSettings metrics;

    [[nodiscard]] double nominal_power_kw() const
    {
        const auto counts = class_counts(aggregate);
        double total = 0.0;
        for (std::size_t c = 0; c < counts.size(); ++c) {
            total += counts[c] * aggregate.classes[c].model.nominal_power_kw;
        }
        return total;
    }

    /// Seeds of the independent random streams, derived from the root seed.
    [[nodiscard]] std::uint64_t population_seed() const { return mix_seed(seed, 0); }
    [[nodiscard]] std::uint64_t flexibility_seed() const { return mix_seed(seed, 1); }
    [[nodiscard]] std::uint64_t closed_loop_seed() const { return mix_seed(seed, 2); }

    void validate() const
    {
        require(!name.empty(), "scenario name must not be empty");
        require(duration_minutes > 0, "duration_min must be positive");
        require(aggregate.units > 0, "aggregate must have units");
        require(substeps >= 1, "substeps_per_min must be >= 1");
        climate.validate();
        require(climate.minutes == duration_minutes, "climate span must equal the scenario span");
        require(schedule.day_minutes == duration_minutes, "schedule span must equal the scenario span");
        mpc.validate();
        identifier.validate();
        flexibility.validate();
        require(metrics.ape_floor_pct_of_nominal >= 0.0, "ape_floor_pct_of_nominal must be >= 0");
        require(metrics.transient_minutes >= 0 && metrics.rebound_window_minutes >= 0,
                "metric windows must be >= 0");
        for (const auto& r : requests) {
            require(r.margin_fraction_pct.has_value() != r.delta_power_kw.has_value(),
                    "each request needs exactly one of margin_fraction_pct or delta_power_kw");
            if (r.margin_fraction_pct) {
                require(*r.margin_fraction_pct >= 0.0 && std::isfinite(*r.margin_fraction_pct),
                        "margin_fraction_pct must be >= 0");
            }
            if (r.delta_power_kw) {
                require_finite(*r.delta_power_kw, "delta_power_kw");
            }
        }
    }
};

namespace detail {

inline void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where)
{
    require(obj.is_object(), where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; });
        require(known, "unknown key '" + key + "' in " + where);
    }
}

template <class T>
void read(const Json& obj, const char* key, T& out, const std::string& where)
{
    if (!obj.contains(key)) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(std::string("bad value for '") + key + "' in " + where);
    }
}

template <class T>
void read_optional(const Json& obj, const char* key, std::optional<T>& out, const std::string& where)
{
    if (!obj.contains(key)) {
        return;
    }
    if (obj.at(key).is_null()) {
        out.reset();
        return;
    }
    T value{};
    read(obj, key, value, where);
    out = value;
}

inline EwhModel model_preset(const std::string& name)
{
    if (name == "ariston_pro_eco_50") {
        return ariston_pro_eco_50();
    }
    if (name == "ariston_pro_eco_80") {
        return ariston_pro_eco_80();
    }
    if (name == "ariston_pro_eco_100") {
        return ariston_pro_eco_100();
    }
    throw Error("unknown water-heater model '" + name + "'");
}

inline AggregateSpec aggregate_preset(const std::string& name)
{
    if (name == "aggregate_1") {
        return aggregate_1();
    }
    if (name == "aggregate_2") {
        return aggregate_2();
    }
    throw Error("unknown aggregate preset '" + name + "'");
}

inline EwhModel read_model(const Json& j)
{
    if (j.is_string()) {
        return model_preset(j.get<std::string>());
    }
    const std::string where = "aggregate.classes[].model";
    check_keys(j, {"name", "capacity_l", "nominal_power_kw", "max_temperature_c", "dispersion_kwh_per_day",
                   "halfband_c"},
               where);
    EwhModel m;
    read(j, "name", m.name, where);
    read(j, "capacity_l", m.capacity_liters, where);
    read(j, "nominal_power_kw", m.nominal_power_kw, where);
    read(j, "max_temperature_c", m.max_temperature_c, where);
    read(j, "dispersion_kwh_per_day", m.dispersion_kwh_per_day, where);
    read(j, "halfband_c", m.halfband_c, where);
    return m;
}

inline Json write_model(const EwhModel& m)
{
    return Json{{"name", m.name},
                {"capacity_l", m.capacity_liters},
                {"nominal_power_kw", m.nominal_power_kw},
                {"max_temperature_c", m.max_temperature_c},
                {"dispersion_kwh_per_day", m.dispersion_kwh_per_day},
                {"halfband_c", m.halfband_c}};
}

inline Weights read_weights(const Json& j, Weights w, const std::string& where)
{
    check_keys(j, {"w_power", "w_setpoint_per_c2", "w_rate_per_c2"}, where);
    read(j, "w_power", w.power, where);
    read(j, "w_setpoint_per_c2", w.setpoint, where);
    read(j, "w_rate_per_c2", w.rate, where);
    return w;
}

inline Json write_weights(const Weights& w)
{
    return Json{{"w_power", w.power}, {"w_setpoint_per_c2", w.setpoint}, {"w_rate_per_c2", w.rate}};
}

inline const char* to_string(TrackingWeightUnits u)
{
    return u == TrackingWeightUnits::normalized ? "normalized" : "per_kw";
}

inline const char* to_string(RequestDirection d)
{
    return d == RequestDirection::down ? "down" : "up";
}

} // namespace detail

/// Parses a scenario document and materializes every default.
inline Scenario scenario_from_json(const Json& root)
{
    using detail::check_keys;
    using detail::read;
    check_keys(root, {"name", "seed", "duration_min", "aggregate", "climate", "plant", "requests", "schedule", "mpc",
                      "identifier", "flexibility", "metrics"},
               "scenario");
    Scenario s;
    read(root, "name", s.name, "scenario");
    read(root, "seed", s.seed, "scenario");
    read(root, "duration_min", s.duration_minutes, "scenario");

    if (root.contains("aggregate")) {
        const auto& a = root.at("aggregate");
        const std::string where = "aggregate";
        check_keys(a, {"preset", "name", "units", "classes", "setpoint_min_c", "setpoint_max_c", "initial_ambient_c"},
                   where);
        if (a.contains("preset")) {
            std::string preset;
            read(a, "preset", preset, where);
            s.aggregate = detail::aggregate_preset(preset);
        }
        if (a.contains("classes")) {
            s.aggregate.classes.clear();
            require(a.at("classes").is_array(), "aggregate.classes must be an array");
            for (const auto& c : a.at("classes")) {
                detail::check_keys(c, {"model", "share_pct"}, "aggregate.classes[]");
                require(c.contains("model"), "aggregate class needs a model");
                UnitClass uc{detail::read_model(c.at("model")), 100.0};
                read(c, "share_pct", uc.share_percent, "aggregate.classes[]");
                s.aggregate.classes.push_back(uc);
            }
        }
        read(a, "name", s.aggregate.name, where);
        read(a, "units", s.aggregate.units, where);
        read(a, "setpoint_min_c", s.aggregate.setpoint_min_c, where);
        read(a, "setpoint_max_c", s.aggregate.setpoint_max_c, where);
        read(a, "initial_ambient_c", s.aggregate.initial_ambient_c, where);
    }

    s.climate.minutes = s.duration_minutes;
    if (root.contains("climate")) {
        const auto& c = root.at("climate");
        const std::string where = "climate";
        check_keys(c, {"ambient_mean_c", "ambient_amplitude_c", "ambient_peak_hour_h", "cold_water_mean_c",
                       "cold_water_amplitude_c", "cold_water_peak_hour_h", "daily_draw_volume_l", "draw_event_min_l",
                       "draw_event_max_l", "hourly_draw_profile"},
                   where);
        read(c, "ambient_mean_c", s.climate.ambient_mean_c, where);
        read(c, "ambient_amplitude_c", s.climate.ambient_amplitude_c, where);
        read(c, "ambient_peak_hour_h", s.climate.ambient_peak_hour, where);
        read(c, "cold_water_mean_c", s.climate.cold_water_mean_c, where);
        read(c, "cold_water_amplitude_c", s.climate.cold_water_amplitude_c, where);
        read(c, "cold_water_peak_hour_h", s.climate.cold_water_peak_hour, where);
        read(c, "daily_draw_volume_l", s.climate.daily_volume_liters, where);
        read(c, "draw_event_min_l", s.climate.event_min_liters, where);
        read(c, "draw_event_max_l", s.climate.event_max_liters, where);
        if (c.contains("hourly_draw_profile")) {
            const auto& p = c.at("hourly_draw_profile");
            require(p.is_array() && p.size() == 24, "hourly_draw_profile needs 24 values");
            for (std::size_t h = 0; h < 24; ++h) {
                require(p[h].is_number(), "hourly_draw_profile values must be numbers");
                s.climate.hourly_profile[h] = p[h].get<double>();
            }
        }
    }

    if (root.contains("plant")) {
        const auto& p = root.at("plant");
        check_keys(p, {"substeps_per_min"}, "plant");
        read(p, "substeps_per_min", s.substeps, "plant");
    }

    if (root.contains("requests")) {
        require(root.at("requests").is_array(), "requests must be an array");
        for (const auto& r : root.at("requests")) {
            const std::string where = "requests[]";
            check_keys(r, {"start_min", "duration_min", "direction", "margin_fraction_pct", "delta_power_kw",
                           "rebound_mitigation"},
                       where);
            require(r.contains("start_min") && r.contains("duration_min"),
                    "each request needs start_min and duration_min");
            RequestSpec q;
            read(r, "start_min", q.start_minute, where);
            read(r, "duration_min", q.duration_minutes, where);
            if (r.contains("direction")) {
                std::string d;
                read(r, "direction", d, where);
                require(d == "down" || d == "up", "direction must be 'down' or 'up'");
                q.direction = d == "down" ? RequestDirection::down : RequestDirection::up;
            }
            detail::read_optional(r, "margin_fraction_pct", q.margin_fraction_pct, where);
            detail::read_optional(r, "delta_power_kw", q.delta_power_kw, where);
            read(r, "rebound_mitigation", q.rebound_mitigation, where);
            s.requests.push_back(q);
        }
    }

    s.schedule.day_minutes = s.duration_minutes;
    if (root.contains("schedule")) {
        const auto& m = root.at("schedule");
        const std::string where = "schedule";
        check_keys(m, {"reference_ramp_min", "mode_ramp_min", "rebound_ramp_min", "truncate_rebound_hold", "cm1",
                       "cm2"},
                   where);
        read(m, "reference_ramp_min", s.schedule.reference_ramp_minutes, where);
        read(m, "mode_ramp_min", s.schedule.mode_ramp_minutes, where);
        read(m, "rebound_ramp_min", s.schedule.rebound_ramp_minutes, where);
        read(m, "truncate_rebound_hold", s.schedule.truncate_rebound_hold, where);
        if (m.contains("cm1")) {
            s.schedule.cm1 = detail::read_weights(m.at("cm1"), s.schedule.cm1, "schedule.cm1");
        }
        if (m.contains("cm2")) {
            s.schedule.cm2 = detail::read_weights(m.at("cm2"), s.schedule.cm2, "schedule.cm2");
        }
    }

    s.mpc.nominal_power_kw = s.nominal_power_kw();
    if (root.contains("mpc")) {
        const auto& m = root.at("mpc");
        const std::string where = "mpc";
        check_keys(m, {"prediction_horizon_min", "control_horizon_min", "delta_min_c", "delta_max_c",
                       "solver_tolerance", "max_iterations", "tracking_weight_units"},
                   where);
        read(m, "prediction_horizon_min", s.mpc.horizon_T, where);
        read(m, "control_horizon_min", s.mpc.horizon_L, where);
        read(m, "delta_min_c", s.mpc.delta_min, where);
        read(m, "delta_max_c", s.mpc.delta_max, where);
        read(m, "solver_tolerance", s.mpc.solver_tolerance, where);
        read(m, "max_iterations", s.mpc.max_iterations, where);
        if (m.contains("tracking_weight_units")) {
            std::string u;
            read(m, "tracking_weight_units", u, where);
            require(u == "normalized" || u == "per_kw", "tracking_weight_units must be 'normalized' or 'per_kw'");
            s.mpc.tracking_units = u == "normalized" ? TrackingWeightUnits::normalized : TrackingWeightUnits::per_kw;
        }
    }

    // Closed-loop identifier defaults, scaled to this aggregate.
    s.identifier.power_scale_kw = s.mpc.nominal_power_kw;
    s.identifier.a0 = ClosedLoopIdentifier::a0;
    s.identifier.b0 = ClosedLoopIdentifier::b0_per_nominal * s.mpc.nominal_power_kw;
    s.identifier.prior_variance = ClosedLoopIdentifier::prior_variance;
    s.identifier.process_noise = Eigen::Vector3d(ClosedLoopIdentifier::process_noise[0],
                                                 ClosedLoopIdentifier::process_noise[1],
                                                 ClosedLoopIdentifier::process_noise[2]);
    s.identifier.measurement_noise = ClosedLoopIdentifier::measurement_noise;
    if (root.contains("identifier")) {
        const auto& i = root.at("identifier");
        const std::string where = "identifier";
        check_keys(i, {"a0", "b0_kw_per_c", "w0_kw", "prior_variance", "process_noise", "measurement_noise"}, where);
        read(i, "a0", s.identifier.a0, where);
        read(i, "b0_kw_per_c", s.identifier.b0, where);
        detail::read_optional(i, "w0_kw", s.identifier.w0, where);
        read(i, "prior_variance", s.identifier.prior_variance, where);
        if (i.contains("process_noise")) {
            std::vector<double> r1;
            read(i, "process_noise", r1, where);
            require(r1.size() == 3, "identifier.process_noise needs 3 values (a, b, w)");
            s.identifier.process_noise = Eigen::Vector3d(r1[0], r1[1], r1[2]);
        }
        read(i, "measurement_noise", s.identifier.measurement_noise, where);
    }

    if (root.contains("flexibility")) {
        const auto& f = root.at("flexibility");
        const std::string where = "flexibility";
        check_keys(f, {"ensemble_size", "user_min_offset_c", "user_min_floor_c", "threads"}, where);
        read(f, "ensemble_size", s.flexibility.ensemble_size, where);
        read(f, "user_min_offset_c", s.flexibility.user_min_offset_c, where);
        read(f, "user_min_floor_c", s.flexibility.user_min_floor_c, where);
        read(f, "threads", s.flexibility.threads, where);
    }
    s.flexibility.substeps = s.substeps;

    if (root.contains("metrics")) {
        const auto& m = root.at("metrics");
        const std::string where = "metrics";
        check_keys(m, {"ape_floor_pct_of_nominal", "transient_min", "rebound_window_min"}, where);
        read(m, "ape_floor_pct_of_nominal", s.metrics.ape_floor_pct_of_nominal, where);
        read(m, "transient_min", s.metrics.transient_minutes, where);
        read(m, "rebound_window_min", s.metrics.rebound_window_minutes, where);
    }

    s.validate();
    return s;
}

inline Scenario parse_scenario(const std::string& text)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("scenario is not valid JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

inline Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open scenario file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

/// The fully materialized scenario.
inline Json to_json(const Scenario& s)
{
    Json aggregate{{"name", s.aggregate.name}, {"units", s.aggregate.units}};
    Json classes = Json::array();
    for (const auto& c : s.aggregate.classes) {
        classes.push_back(Json{{"model", detail::write_model(c.model)}, {"share_pct", c.share_percent}});
    }
    aggregate["classes"] = classes;
    aggregate["setpoint_min_c"] = s.aggregate.setpoint_min_c;
    aggregate["setpoint_max_c"] = s.aggregate.setpoint_max_c;
    aggregate["initial_ambient_c"] = s.aggregate.initial_ambient_c;

    const auto& c = s.climate;
    Json climate{{"ambient_mean_c", c.ambient_mean_c},
                 {"ambient_amplitude_c", c.ambient_amplitude_c},
                 {"ambient_peak_hour_h", c.ambient_peak_hour},
                 {"cold_water_mean_c", c.cold_water_mean_c},
                 {"cold_water_amplitude_c", c.cold_water_amplitude_c},
                 {"cold_water_peak_hour_h", c.cold_water_peak_hour},
                 {"daily_draw_volume_l", c.daily_volume_liters},
                 {"draw_event_min_l", c.event_min_liters},
                 {"draw_event_max_l", c.event_max_liters},
                 {"hourly_draw_profile", c.hourly_profile}};

    Json requests = Json::array();
    for (const auto& r : s.requests) {
        Json q{{"start_min", r.start_minute}, {"duration_min", r.duration_minutes}};
        if (r.margin_fraction_pct) {
            q["direction"] = detail::to_string(r.direction);
            q["margin_fraction_pct"] = *r.margin_fraction_pct;
        } else {
            q["delta_power_kw"] = *r.delta_power_kw;
        }
        q["rebound_mitigation"] = r.rebound_mitigation;
        requests.push_back(q);
    }

    const auto& m = s.mpc;
    const auto& i = s.identifier;
    return Json{
        {"name", s.name},
        {"seed", s.seed},
        {"duration_min", s.duration_minutes},
        {"aggregate", aggregate},
        {"climate", climate},
        {"plant", Json{{"substeps_per_min", s.substeps}}},
        {"requests", requests},
        {"schedule", Json{{"reference_ramp_min", s.schedule.reference_ramp_minutes},
                          {"mode_ramp_min", s.schedule.mode_ramp_minutes},
                          {"rebound_ramp_min", s.schedule.rebound_ramp_minutes},
                          {"truncate_rebound_hold", s.schedule.truncate_rebound_hold},
                          {"cm1", detail::write_weights(s.schedule.cm1)},
                          {"cm2", detail::write_weights(s.schedule.cm2)}}},
        {"mpc", Json{{"prediction_horizon_min", m.horizon_T},
                     {"control_horizon_min", m.horizon_L},
                     {"delta_min_c", m.delta_min},
                     {"delta_max_c", m.delta_max},
                     {"solver_tolerance", m.solver_tolerance},
                     {"max_iterations", m.max_iterations},
                     {"tracking_weight_units", detail::to_string(m.tracking_units)}}},
        {"identifier", Json{{"a0", i.a0},
                            {"b0_kw_per_c", i.b0},
                            {"w0_kw", i.w0 ? Json(*i.w0) : Json(nullptr)},
                            {"prior_variance", i.prior_variance},
                            {"process_noise", std::vector<double>{i.process_noise[0], i.process_noise[1],
                                                                  i.process_noise[2]}},
                            {"measurement_noise", i.measurement_noise}}},
        {"flexibility", Json{{"ensemble_size", s.flexibility.ensemble_size},
                             {"user_min_offset_c", s.flexibility.user_min_offset_c},
                             {"user_min_floor_c", s.flexibility.user_min_floor_c},
                             {"threads", s.flexibility.threads}}},
        {"metrics", Json{{"ape_floor_pct_of_nominal", s.metrics.ape_floor_pct_of_nominal},
                         {"transient_min", s.metrics.transient_minutes},
                         {"rebound_window_min", s.metrics.rebound_window_minutes}}},
    };
}

inline bool operator==(const Scenario& a, const Scenario& b)
{
    return to_json(a) == to_json(b);
}

} // namespace ewhmpc
