// Command-line driver.
//
//   ewhmpc run <scenario.json>   closed-loop run, writes CSVs, report and chart
//   ewhmpc flex <scenario.json>  flexibility profiles and margins only
//   ewhmpc batch <dir>           every *.json in dir, one output folder each
//
// Common flags: --seed (overrides the scenario's root seed), --out, --no-charts.

#include "ewhmpc/harness.hpp"
#include "ewhmpc/report.hpp"
#include "ewhmpc/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace ewhmpc;

namespace {

struct Flags {
    std::optional<std::uint64_t> seed;
    std::string out = "out";
    bool no_charts = false;
    unsigned jobs = 0;
};

Scenario load(const fs::path& path, const Flags& flags)
{
    Scenario s = load_scenario(path);
    if (flags.seed) {
        s.seed = *flags.seed;
    }
    return s;
}

std::string summary(const RunResult& r)
{
    const auto& m = r.metrics;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s: MAPE %.2f%%  APE_max %.2f%%  f5 %.2f%%", r.scenario.name.c_str(),
                  m.overall.mape, m.overall.ape_max, m.overall.f_5);
    std::string out = buf;
    for (const auto& e : m.services) {
        std::snprintf(buf, sizeof buf, "\n  service %d+%d min: requested %.1f kWh, delivered %.1f kWh, rebound %.1f kWh",
                      e.start, e.duration, e.requested_kwh, e.delivered_kwh, e.rebound_kwh);
        out += buf;
    }
    for (const auto& w : r.schedule.warnings()) {
        out += "\n  warning: " + w;
    }
    return out;
}

int run_one(const fs::path& scenario_path, const fs::path& out_dir, const Flags& flags)
{
    const Scenario s = load(scenario_path, flags);
    const RunResult r = run_scenario(s);
    write_run_outputs(r, out_dir, {.charts = !flags.no_charts});
    std::printf("%s\n  -> %s\n", summary(r).c_str(), out_dir.string().c_str());
    return 0;
}

int flex_one(const fs::path& scenario_path, const fs::path& out_dir, const Flags& flags)
{
    const Scenario s = load(scenario_path, flags);
    const FlexResult f = run_flexibility(s);
    write_flex_outputs(s, f, out_dir);
    std::printf("%s: %d members\n", s.name.c_str(), f.profiles.front().ensemble_size);
    for (const auto& q : f.requests) {
        std::printf("  tau %d dt %d: up %+.1f kW  down %+.1f kW  requested %+.1f kW\n", q.spec.start_minute,
                    q.spec.duration_minutes, q.margins.upward_kw, q.margins.downward_kw, q.delta_power_kw);
    }
    std::printf("  -> %s\n", out_dir.string().c_str());
    return 0;
}

int batch(const fs::path& dir, const Flags& flags)
{
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::fprintf(stderr, "no *.json scenarios in %s\n", dir.string().c_str());
        return 1;
    }

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers = std::min<unsigned>(flags.jobs ? flags.jobs : hw, static_cast<unsigned>(files.size()));
    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};
    std::mutex io;
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < files.size(); i = next++) {
                    const auto& f = files[i];
                    try {
                        const Scenario s = load(f, flags);
                        const RunResult r = run_scenario(s);
                        const fs::path out_dir = fs::path(flags.out) / f.stem();
                        write_run_outputs(r, out_dir, {.charts = !flags.no_charts});
                        std::lock_guard lock(io);
                        std::printf("%s\n  -> %s\n", summary(r).c_str(), out_dir.string().c_str());
                    } catch (const std::exception& e) {
                        ++failures;
                        std::lock_guard lock(io);
                        std::fprintf(stderr, "%s: %s\n", f.string().c_str(), e.what());
                    }
                }
            });
        }
    }
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Adaptive MPC demand response for aggregates of electric water heaters"};
    app.require_subcommand(1);

    Flags flags;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Root seed (overrides the scenario)");
        cmd->add_option("--out", flags.out, "Output directory")->capture_default_str();
        cmd->add_flag("--no-charts", flags.no_charts, "Skip SVG charts");
    };

    std::string scenario_path;
    auto* run = app.add_subcommand("run", "Run a scenario in closed loop");
    run->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    add_common(run);

    auto* flex = app.add_subcommand("flex", "Flexibility profiles and margins only");
    flex->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    add_common(flex);

    std::string batch_dir;
    auto* bat = app.add_subcommand("batch", "Run every scenario in a directory");
    bat->add_option("dir", batch_dir, "Directory of scenario JSON files")->required()->check(CLI::ExistingDirectory);
    bat->add_option("--jobs", flags.jobs, "Parallel scenarios (0: hardware threads)");
    add_common(bat);

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto* cmd : {run, flex, bat}) {
            if (cmd->count("--seed") > 0) {
                flags.seed = seed;
            }
        }
        if (*run) {
            return run_one(scenario_path, flags.out, flags);
        }
        if (*flex) {
            return flex_one(scenario_path, flags.out, flags);
        }
        return batch(batch_dir, flags);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
