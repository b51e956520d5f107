#include "ewhmpc/exogenous.hpp"
#include "ewhmpc/plant.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace ewhmpc;

TEST(Exogenous, IntensitySumsToOnePerDay)
{
    ExogenousConfig cfg;
    const auto w = draw_intensity(cfg);
    ASSERT_EQ(w.size(), 1440u);
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
    // Morning peak outweighs the small hours.
    EXPECT_GT(w[8 * 60], 10.0 * w[3 * 60]);
}

TEST(Exogenous, ClimatePeaksAtConfiguredHour)
{
    ExogenousConfig cfg;
    const auto in = generate_inputs(cfg, std::vector<double>(3, 100.0), 1);
    const auto amb = in.ambient_c();
    const auto peak = std::max_element(amb.begin(), amb.end()) - amb.begin();
    EXPECT_EQ(peak, 15 * 60);
    EXPECT_DOUBLE_EQ(amb[15 * 60], 22.0);
    EXPECT_DOUBLE_EQ(amb[3 * 60], 18.0);
    EXPECT_DOUBLE_EQ(in.cold_water_c()[17 * 60], 15.5);
}

TEST(Exogenous, DrawsBoundedByCapacity)
{
    ExogenousConfig cfg;
    cfg.daily_volume_liters = 400.0;
    const std::vector<double> caps{50.0, 80.0, 100.0};
    const auto in = generate_inputs(cfg, caps, 2);
    for (int m = 0; m < in.minutes(); ++m) {
        const auto d = in.draws_at(m);
        for (std::size_t u = 0; u < caps.size(); ++u) {
            EXPECT_GE(d[u], 0.0);
            EXPECT_LE(d[u], caps[u]);
        }
    }
}

TEST(Exogenous, MeanDailyVolumeMatchesConfig)
{
    ExogenousConfig cfg;
    const std::vector<double> caps(2000, 100.0);
    const auto in = generate_inputs(cfg, caps, 3);
    const double per_unit = in.total_draw_liters() / static_cast<double>(caps.size());
    EXPECT_NEAR(per_unit, cfg.daily_volume_liters, 0.05 * cfg.daily_volume_liters);
}

TEST(Exogenous, DeterministicPerSeed)
{
    ExogenousConfig cfg;
    const std::vector<double> caps(50, 100.0);
    const auto a = generate_inputs(cfg, caps, 7);
    const auto b = generate_inputs(cfg, caps, 7);
    const auto c = generate_inputs(cfg, caps, 8);
    bool same_c = true;
    for (int m = 0; m < a.minutes(); ++m) {
        const auto da = a.draws_at(m);
        const auto db = b.draws_at(m);
        const auto dc = c.draws_at(m);
        EXPECT_TRUE(std::equal(da.begin(), da.end(), db.begin()));
        same_c &= std::equal(da.begin(), da.end(), dc.begin());
    }
    EXPECT_FALSE(same_c);
}

TEST(Exogenous, RejectsInvalidConfig)
{
    ExogenousConfig cfg;
    cfg.event_min_liters = 50.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    cfg.hourly_profile.fill(0.0);
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    cfg.minutes = 0;
    EXPECT_THROW(cfg.validate(), Error);
    EXPECT_THROW((void)generate_inputs(ExogenousConfig{}, std::vector<double>(2, 1.0), 1).at(1440), Error);
}
