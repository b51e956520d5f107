#include "ewhmpc/metrics.hpp"

#include <gtest/gtest.h>

using namespace ewhmpc;

namespace {

std::vector<std::optional<double>> series(std::initializer_list<double> v)
{
    return {v.begin(), v.end()};
}

} // namespace

TEST(Ape, Examples)
{
    EXPECT_EQ(*ape(500.0, 500.0), 0.0);
    EXPECT_DOUBLE_EQ(*ape(95.0, 100.0), 5.0);
    EXPECT_DOUBLE_EQ(*ape(105.0, 100.0), 5.0);
    EXPECT_FALSE(ape(100.0, 0.0).has_value());
}

TEST(Ape, FloorExcludesSmallReferences)
{
    EXPECT_FALSE(ape(10.0, 8.0, 9.0).has_value());
    EXPECT_FALSE(ape(10.0, 9.0, 9.0).has_value());
    EXPECT_TRUE(ape(10.0, 9.5, 9.0).has_value());
    EXPECT_FALSE(ape(10.0, -5.0).has_value());
}

TEST(ApeStats, ConstantSeries)
{
    const auto s = compute_metrics(series({2, 2, 2, 2}));
    EXPECT_DOUBLE_EQ(s.mape, 2.0);
    EXPECT_DOUBLE_EQ(s.ape_max, 2.0);
    EXPECT_EQ(s.f_5, 0.0);
}

TEST(ApeStats, MixedSeries)
{
    const auto s = compute_metrics(series({1, 6, 2, 9}));
    EXPECT_DOUBLE_EQ(s.mape, 4.5);
    EXPECT_DOUBLE_EQ(s.ape_max, 9.0);
    EXPECT_DOUBLE_EQ(s.f_5, 50.0);
    EXPECT_EQ(s.included, 4);
}

TEST(ApeStats, ExcludedSamplesAreCounted)
{
    std::vector<std::optional<double>> v{1.0, std::nullopt, 3.0};
    const auto s = compute_metrics(v);
    EXPECT_DOUBLE_EQ(s.mape, 2.0);
    EXPECT_EQ(s.included, 2);
    EXPECT_EQ(s.excluded, 1);
}

TEST(ApeStats, ExactlyFivePercentIsNotAbove)
{
    EXPECT_EQ(compute_metrics(series({5.0, 5.0})).f_5, 0.0);
}

TEST(ApeStats, SkipWindows)
{
    const std::vector<Window> skip{{1, 3}};
    const auto s = compute_metrics(series({1, 50, 60, 3}), skip);
    EXPECT_DOUBLE_EQ(s.mape, 2.0);
    EXPECT_EQ(s.included, 2);
}

TEST(ApeStats, EmptySeriesIsAnError)
{
    EXPECT_THROW(compute_metrics(std::vector<std::optional<double>>{}), Error);
}

TEST(Report, TransientWindowsAndEnergy)
{
    const int n = 200;
    std::vector<double> base(n, 120.0);
    std::vector<double> ref = base;
    std::vector<double> power = base;
    for (int k = 60; k < 120; ++k) {
        ref[static_cast<std::size_t>(k)] = 60.0;
        power[static_cast<std::size_t>(k)] = k < 70 ? 90.0 : 60.0;
    }
    for (int k = 120; k < 150; ++k) {
        power[static_cast<std::size_t>(k)] = 180.0;
    }
    const std::vector<ServiceWindow> services{{60, 60}};
    MetricsOptions o;
    o.transient_minutes = 15;
    o.rebound_window_minutes = 60;
    const auto r = compute_metrics(power, ref, base, services, o);

    EXPECT_EQ(transient_windows(services, 15).size(), 2u);
    EXPECT_EQ(r.ape_series.size(), static_cast<std::size_t>(n));
    EXPECT_DOUBLE_EQ(r.overall.ape_max, 50.0);
    EXPECT_EQ(r.outside_transients.ape_max, 50.0); // minutes 135..149 still deviate
    EXPECT_EQ(r.outside_transients.included, n - 30);

    ASSERT_EQ(r.services.size(), 1u);
    EXPECT_DOUBLE_EQ(r.services[0].requested_kwh, -60.0);
    EXPECT_DOUBLE_EQ(r.services[0].delivered_kwh, (-30.0 * 10 - 60.0 * 50) / 60.0);
    EXPECT_DOUBLE_EQ(r.services[0].rebound_kwh, 60.0 * 30 / 60.0);
}

TEST(Report, RejectsMismatchedSeries)
{
    const std::vector<double> a(5, 1.0);
    const std::vector<double> b(4, 1.0);
    EXPECT_THROW(compute_metrics(a, b, a, {}), Error);
    EXPECT_THROW(compute_metrics(std::vector<double>{}, std::vector<double>{}, std::vector<double>{}, {}), Error);
}
