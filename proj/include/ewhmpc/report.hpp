#pragma once

// Output files of a run. CSVs have a header row, fixed column order and
// fixed-precision numbers so identical runs give identical bytes.
//
//   series.csv      minute,p_a_kw,p_ref_kw,baseline_kw,delta_theta_c,a_hat,b_hat,w_hat,ape_pct
//   controller.csv  minute,predicted_kw,cost,kkt_residual,w_power,w_setpoint,w_rate
//   profiles.csv    minute,baseline_kw,up_kw,down_kw (first activation minute;
//                   profiles_<minute>.csv for any further ones)
//   margins.csv     one row per request
//   breakpoints.csv schedule breakpoints
//   report.json     materialized scenario, margins, metrics, diagnostics
//   chart.svg       power / deviation / set-point panels

#include "ewhmpc/harness.hpp"
#include "ewhmpc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace ewhmpc {

namespace detail {

inline std::string fixed(double v, int decimals = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    // Avoid "-0.000000".
    std::string s(buf);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') {
        s.erase(0, 1);
    }
    return s;
}

inline std::string sci(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot write " + path.string());
    out << content;
}

} // namespace detail

inline std::string series_csv(const RunResult& r)
{
    using detail::fixed;
    std::string out = "minute,p_a_kw,p_ref_kw,baseline_kw,delta_theta_c,a_hat,b_hat,w_hat,ape_pct\n";
    const auto& s = r.series;
    const auto& base = r.baseline_kw();
    for (std::size_t k = 0; k < s.power_kw.size(); ++k) {
        const auto& e = s.estimates[k];
        const auto& ape = r.metrics.ape_series[k];
        out += std::to_string(k) + ',' + fixed(s.power_kw[k]) + ',' + fixed(s.reference_kw[k]) + ',' +
               fixed(base[k]) + ',' + fixed(s.delta_c[k]) + ',' + fixed(e.a) + ',' + fixed(e.b) + ',' +
               fixed(e.w) + ',' + (ape ? fixed(*ape) : std::string()) + '\n';
    }
    return out;
}

inline std::string controller_csv(const RunResult& r)
{
    using detail::fixed;
    std::string out = "minute,predicted_kw,cost,kkt_residual,w_power,w_setpoint,w_rate\n";
    const auto& s = r.series;
    for (std::size_t k = 0; k < s.power_kw.size(); ++k) {
        const auto w = weights_at(static_cast<int>(k), r.schedule);
        out += std::to_string(k) + ',' + fixed(s.predicted_kw[k]) + ',' + detail::sci(s.cost[k]) + ',' +
               detail::sci(s.kkt_residual[k]) + ',' + fixed(w.power) + ',' + fixed(w.setpoint) + ',' +
               fixed(w.rate) + '\n';
    }
    return out;
}

inline std::string profiles_csv(const FlexProfiles& p)
{
    using detail::fixed;
    std::string out = "minute,baseline_kw,up_kw,down_kw\n";
    for (std::size_t k = 0; k < p.baseline.size(); ++k) {
        out += std::to_string(k) + ',' + fixed(p.baseline[k]) + ',' + fixed(p.upward[k]) + ',' +
               fixed(p.downward[k]) + '\n';
    }
    return out;
}

inline std::string margins_csv(const FlexResult& f)
{
    using detail::fixed;
    std::string out = "start_min,duration_min,up_kw,down_kw,requested_kw\n";
    for (const auto& q : f.requests) {
        out += std::to_string(q.spec.start_minute) + ',' + std::to_string(q.spec.duration_minutes) + ',' +
               fixed(q.margins.upward_kw) + ',' + fixed(q.margins.downward_kw) + ',' + fixed(q.delta_power_kw) +
               '\n';
    }
    return out;
}

inline std::string breakpoints_csv(const Schedule& schedule)
{
    std::string out = "minute,event\n";
    for (const auto& b : schedule.breakpoints()) {
        out += std::to_string(b.minute) + ',' + b.label + '\n';
    }
    return out;
}

namespace detail {

inline Json stats_json(const ApeStats& s)
{
    return Json{{"mape_pct", s.mape},
                {"ape_max_pct", s.ape_max},
                {"f5_pct", s.f_5},
                {"included_samples", s.included},
                {"excluded_samples", s.excluded}};
}

inline Json requests_json(const FlexResult& f)
{
    Json out = Json::array();
    for (const auto& q : f.requests) {
        out.push_back(Json{{"start_min", q.spec.start_minute},
                           {"duration_min", q.spec.duration_minutes},
                           {"margin_up_kw", q.margins.upward_kw},
                           {"margin_down_kw", q.margins.downward_kw},
                           {"delta_power_kw", q.delta_power_kw},
                           {"rebound_mitigation", q.spec.rebound_mitigation}});
    }
    return out;
}

} // namespace detail

inline Json flex_report_json(const Scenario& scenario, const FlexResult& f)
{
    return Json{{"scenario", to_json(scenario)},
                {"seeds", Json{{"population", scenario.population_seed()},
                               {"flexibility", scenario.flexibility_seed()}}},
                {"ensemble_size", f.profiles.front().ensemble_size},
                {"requests", detail::requests_json(f)}};
}

inline Json report_json(const RunResult& r)
{
    Json services = Json::array();
    for (const auto& e : r.metrics.services) {
        services.push_back(Json{{"start_min", e.start},
                                {"duration_min", e.duration},
                                {"requested_energy_kwh", e.requested_kwh},
                                {"delivered_energy_kwh", e.delivered_kwh},
                                {"rebound_energy_kwh", e.rebound_kwh}});
    }
    Json metrics{{"ape_floor_kw", r.ape_floor_kw},
                 {"overall", detail::stats_json(r.metrics.overall)}};
    if (!r.scenario.requests.empty()) {
        metrics["outside_transients"] = detail::stats_json(r.metrics.outside_transients);
        metrics["services"] = services;
    }
    Json warnings = Json::array();
    for (const auto& w : r.schedule.warnings()) {
        warnings.push_back(w);
    }
    return Json{{"scenario", to_json(r.scenario)},
                {"seeds", Json{{"population", r.scenario.population_seed()},
                               {"flexibility", r.scenario.flexibility_seed()},
                               {"closed_loop", r.scenario.closed_loop_seed()}}},
                {"nominal_power_kw", r.nominal_power_kw},
                {"ensemble_size", r.flex.profiles.front().ensemble_size},
                {"requests", detail::requests_json(r.flex)},
                {"metrics", metrics},
                {"solver", Json{{"failures", r.series.solver_failures},
                                {"unconverged", r.series.solver_unconverged}}},
                {"warnings", warnings}};
}

namespace detail {

struct Panel {
    double top = 0.0;
    double height = 0.0;
    double ymin = 0.0;
    double ymax = 1.0;
};

inline std::string polyline(const std::vector<double>& values, const Panel& p, double left, double width,
                            const char* colour, const char* dash = nullptr)
{
    const double n = std::max<double>(1.0, static_cast<double>(values.size()) - 1.0);
    std::string pts;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double x = left + width * static_cast<double>(k) / n;
        const double y = p.top + p.height * (1.0 - (values[k] - p.ymin) / (p.ymax - p.ymin));
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.1f,%.1f ", x, y);
        pts += buf;
    }
    std::string out = "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.2\"";
    if (dash) {
        out += " stroke-dasharray=\"" + std::string(dash) + "\"";
    }
    return out + " points=\"" + pts + "\"/>\n";
}

inline Panel panel_for(double top, double height, std::initializer_list<const std::vector<double>*> series)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto* s : series) {
        for (double v : *s) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    return {top, height, lo - pad, hi + pad};
}

inline std::string text(double x, double y, const std::string& s, const char* anchor = "start")
{
    char buf[96];
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"%s\">", x, y, anchor);
    return buf + s + "</text>\n";
}

inline std::string frame(const Panel& p, double left, double width, const std::string& title, int minutes)
{
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"#999\"/>\n", left,
                  p.top, width, p.height);
    out += buf;
    out += text(left, p.top - 6, title);
    out += text(left - 6, p.top + 10, fixed(p.ymax, 1), "end");
    out += text(left - 6, p.top + p.height, fixed(p.ymin, 1), "end");
    for (int h = 0; h <= minutes / 60; h += 2) {
        const double x = left + width * (h * 60.0) / std::max(1, minutes - 1);
        out += text(x, p.top + p.height + 14, std::to_string(h) + "h", "middle");
    }
    return out;
}

} // namespace detail

/// Three panels: power with reference, baseline and flexibility envelopes;
/// deviation from baseline against the request; broadcast set-point delta.
inline std::string chart_svg(const RunResult& r)
{
    using detail::Panel;
    const double left = 70.0, width = 880.0, height = 220.0, gap = 60.0;
    const auto& s = r.series;
    const auto& prof = r.flex.profiles.front();
    const auto& base = r.baseline_kw();
    const int minutes = static_cast<int>(s.power_kw.size());

    std::vector<double> deviation(s.power_kw.size()), requested(s.power_kw.size());
    for (std::size_t k = 0; k < deviation.size(); ++k) {
        deviation[k] = s.power_kw[k] - base[k];
        requested[k] = s.reference_kw[k] - base[k];
    }

    const Panel p1 = detail::panel_for(40.0, height, {&s.power_kw, &s.reference_kw, &prof.upward, &prof.downward});
    const Panel p2 = detail::panel_for(40.0 + height + gap, height, {&deviation, &requested});
    const Panel p3 = detail::panel_for(40.0 + 2 * (height + gap), height, {&s.delta_c});

    std::string out =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1000\" height=\"900\" font-family=\"sans-serif\" "
        "font-size=\"11\">\n<rect width=\"1000\" height=\"900\" fill=\"white\"/>\n";
    out += detail::frame(p1, left, width, "Aggregate power [kW]: measured (black), reference (red), baseline (blue), "
                                          "up/down profiles (grey)", minutes);
    out += detail::polyline(prof.upward, p1, left, width, "#aaa", "4,3");
    out += detail::polyline(prof.downward, p1, left, width, "#aaa", "4,3");
    out += detail::polyline(base, p1, left, width, "#1f5fbf");
    out += detail::polyline(s.reference_kw, p1, left, width, "#d62728");
    out += detail::polyline(s.power_kw, p1, left, width, "black");

    out += detail::frame(p2, left, width, "Deviation from baseline [kW]: delivered (black), requested (red)", minutes);
    out += detail::polyline(requested, p2, left, width, "#d62728");
    out += detail::polyline(deviation, p2, left, width, "black");

    out += detail::frame(p3, left, width, "Set-point variation [°C]", minutes);
    out += detail::polyline(s.delta_c, p3, left, width, "black");
    out += "</svg>\n";
    return out;
}

struct OutputOptions {
    bool charts = true;
};

namespace detail {

// profiles.csv holds the first activation; later ones get their own file.
inline void write_profiles(const FlexResult& f, const std::filesystem::path& dir)
{
    write_file(dir / "profiles.csv", profiles_csv(f.profiles.front()));
    for (std::size_t i = 1; i < f.profiles.size(); ++i) {
        const auto& p = f.profiles[i];
        write_file(dir / ("profiles_" + std::to_string(p.activation_minute) + ".csv"), profiles_csv(p));
    }
}

} // namespace detail

inline void write_run_outputs(const RunResult& r, const std::filesystem::path& dir, const OutputOptions& options = {})
{
    std::filesystem::create_directories(dir);
    detail::write_file(dir / "series.csv", series_csv(r));
    detail::write_file(dir / "controller.csv", controller_csv(r));
    detail::write_profiles(r.flex, dir);
    detail::write_file(dir / "margins.csv", margins_csv(r.flex));
    detail::write_file(dir / "breakpoints.csv", breakpoints_csv(r.schedule));
    detail::write_file(dir / "report.json", report_json(r).dump(2) + '\n');
    if (options.charts) {
        detail::write_file(dir / "chart.svg", chart_svg(r));
    }
}

inline void write_flex_outputs(const Scenario& scenario, const FlexResult& f, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    detail::write_profiles(f, dir);
    detail::write_file(dir / "margins.csv", margins_csv(f));
    detail::write_file(dir / "flex_report.json", flex_report_json(scenario, f).dump(2) + '\n');
}

} // namespace ewhmpc
