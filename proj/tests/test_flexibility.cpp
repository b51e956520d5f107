#include "ewhmpc/flexibility.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace ewhmpc;

namespace {

AggregateSpec small_aggregate(int units = 60)
{
    AggregateSpec spec = aggregate_2();
    spec.units = units;
    return spec;
}

ExogenousConfig short_day(int minutes = 240)
{
    ExogenousConfig cfg;
    cfg.minutes = minutes;
    return cfg;
}

FlexProfiles profiles(std::vector<double> base, std::vector<double> up, std::vector<double> down)
{
    FlexProfiles p;
    p.baseline = std::move(base);
    p.upward = std::move(up);
    p.downward = std::move(down);
    p.ensemble_size = 1;
    return p;
}

double total(const std::vector<double>& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0);
}

} // namespace

TEST(Margins, UpwardEqualToBaselineGivesZero)
{
    const auto p = profiles({5, 6, 7, 8}, {5, 6, 7, 8}, {1, 2, 3, 4});
    EXPECT_EQ(margins(p, 0, 4).upward_kw, 0.0);
}

TEST(Margins, ConstantDownwardOffset)
{
    const auto p = profiles(std::vector<double>(10, 500.0), std::vector<double>(10, 600.0),
                            std::vector<double>(10, 420.0));
    const auto m = margins(p, 2, 5);
    EXPECT_EQ(m.downward_kw, -80.0);
    EXPECT_EQ(m.upward_kw, 100.0);
}

TEST(Margins, WindowMinimum)
{
    const auto p = profiles({100, 100, 100, 100, 100}, {150, 130, 140, 101, 200}, {10, 40, 25, 5, 99});
    const auto m = margins(p, 0, 3);
    EXPECT_EQ(m.downward_kw, -60.0);
    EXPECT_EQ(m.upward_kw, 30.0);
    EXPECT_EQ(margins(p, 3, 2).downward_kw, -1.0);
}

TEST(Margins, NegativeExcursionsFloorAtZero)
{
    const auto p = profiles({100, 100, 100}, {120, 90, 130}, {110, 50, 60});
    const auto m = margins(p, 0, 3);
    EXPECT_EQ(m.upward_kw, 0.0);
    EXPECT_EQ(m.downward_kw, 0.0);
}

TEST(Margins, RejectsBadWindows)
{
    const auto p = profiles({1, 2, 3}, {1, 2, 3}, {1, 2, 3});
    EXPECT_THROW(margins(p, 0, 0), Error);
    EXPECT_THROW(margins(p, 2, 2), Error);
    EXPECT_THROW(margins(p, -1, 1), Error);
    EXPECT_THROW(margins(profiles({1, 2, 3}, {1, 2}, {1, 2, 3}), 0, 1), Error);
}

TEST(Policy, Setpoints)
{
    const FlexOptions o;
    auto p = EwhParams::make(ariston_pro_eco_100(), 60.0);
    EXPECT_EQ(policy_setpoint(p, SetpointPolicy::baseline, o), 60.0);
    EXPECT_EQ(policy_setpoint(p, SetpointPolicy::max, o), 72.5);
    EXPECT_EQ(policy_setpoint(p, SetpointPolicy::user_min, o), 55.0);
    p.setpoint_c = 48.0;
    EXPECT_EQ(policy_setpoint(p, SetpointPolicy::user_min, o), 45.0);
}

TEST(Profiles, SingleMemberEqualsSinglePlantRun)
{
    const auto pop = build_population(small_aggregate(), 1);
    const auto cfg = short_day();
    FlexOptions o;
    o.ensemble_size = 1;
    const auto mean = estimate_profiles(pop, cfg, SetpointPolicy::baseline, 99, o);
    const auto inputs = generate_inputs(cfg, capacities(pop), detail::member_seed(99, 0));
    EXPECT_EQ(mean, simulate_open_loop(pop, inputs));
}

TEST(Profiles, FlexBranchesMatchStandalonePolicyRuns)
{
    const auto pop = build_population(small_aggregate(), 2);
    const auto cfg = short_day();
    FlexOptions o;
    o.ensemble_size = 6;
    const auto flex = estimate_flex_profiles(pop, cfg, {0, 120}, 5, o);
    ASSERT_EQ(flex.size(), 2u);
    EXPECT_EQ(flex[0].baseline, estimate_profiles(pop, cfg, SetpointPolicy::baseline, 5, o));
    EXPECT_EQ(flex[0].upward, estimate_profiles(pop, cfg, SetpointPolicy::max, 5, o, 0));
    EXPECT_EQ(flex[1].downward, estimate_profiles(pop, cfg, SetpointPolicy::user_min, 5, o, 120));
    EXPECT_EQ(flex[1].activation_minute, 120);
    // Before activation the policy runs are the baseline.
    for (int k = 0; k < 120; ++k) {
        EXPECT_EQ(flex[1].upward[static_cast<std::size_t>(k)], flex[1].baseline[static_cast<std::size_t>(k)]);
    }
}

TEST(Profiles, MaxPolicyUsesMoreEnergy)
{
    const auto pop = build_population(small_aggregate(), 3);
    FlexOptions o;
    o.ensemble_size = 8;
    const auto cfg = short_day(kMinutesPerDay);
    const auto f = estimate_flex_profiles(pop, cfg, {0}, 8, o).front();
    EXPECT_GT(total(f.upward), total(f.baseline));
    EXPECT_LT(total(f.downward), total(f.baseline));
}

TEST(Profiles, ThreadCountDoesNotChangeResult)
{
    const auto pop = build_population(small_aggregate(), 4);
    const auto cfg = short_day();
    FlexOptions a;
    a.ensemble_size = 5;
    a.threads = 1;
    FlexOptions b = a;
    b.threads = 3;
    const auto fa = estimate_flex_profiles(pop, cfg, {30}, 1, a).front();
    const auto fb = estimate_flex_profiles(pop, cfg, {30}, 1, b).front();
    EXPECT_EQ(fa.baseline, fb.baseline);
    EXPECT_EQ(fa.upward, fb.upward);
    EXPECT_EQ(fa.downward, fb.downward);
}

TEST(Profiles, EnsembleMeanSettlesWithSize)
{
    const auto pop = build_population(small_aggregate(40), 5);
    const auto cfg = short_day(600);
    auto mean_of = [&](int m) {
        FlexOptions o;
        o.ensemble_size = m;
        return estimate_profiles(pop, cfg, SetpointPolicy::baseline, 6, o);
    };
    const auto ref = mean_of(128);
    auto distance = [&](const std::vector<double>& v) {
        double d = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) {
            d += std::abs(v[k] - ref[k]);
        }
        return d / static_cast<double>(v.size());
    };
    EXPECT_LT(distance(mean_of(32)), distance(mean_of(2)));
}

TEST(Profiles, RejectsBadArguments)
{
    const auto pop = build_population(small_aggregate(), 1);
    FlexOptions o;
    o.ensemble_size = 0;
    EXPECT_THROW(estimate_profiles(pop, short_day(), SetpointPolicy::baseline, 1, o), Error);
    EXPECT_THROW(estimate_flex_profiles(pop, short_day(), {}, 1), Error);
    EXPECT_THROW(estimate_flex_profiles(pop, short_day(), {240}, 1), Error);
    EXPECT_THROW(policy_setpoint(pop.units()[0].params, static_cast<SetpointPolicy>(7), FlexOptions{}), Error);
}
