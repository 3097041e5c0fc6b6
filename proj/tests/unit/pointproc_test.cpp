#include <gtest/gtest.h>

#include "outbreak/pointproc.hpp"
#include "outbreak/random.hpp"

using namespace outbreak;

namespace {

std::vector<Event> random_events(std::uint64_t seed, std::size_t n, double side, bool ties) {
    auto eng = make_engine(seed, 0);
    std::vector<Event> out;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t += ties ? std::floor(2.0 * uniform01(eng)) : -std::log(1.0 - uniform01(eng));
        out.push_back({side * uniform01(eng), side * uniform01(eng), t, i});
    }
    return out;
}

}  // namespace

TEST(ShiryaevRoberts, FirstEventIsBounded) {
    SrState s({10.0, 0.2, 30.0});
    auto rec = s.update({0, 0, 1.0, 0});
    EXPECT_DOUBLE_EQ(rec.statistic_value, 1.0);
    EXPECT_LE(rec.statistic_value, 1.2);
    EXPECT_FALSE(rec.alarm);
}

TEST(ShiryaevRoberts, TwoColocatedEvents) {
    SrState s({100.0, 0.2, 30.0});
    (void)s.update({5, 5, 1.0, 0});
    auto rec = s.update({5, 5, 2.0, 1});
    EXPECT_NEAR(std::exp(s.log_lambda(0)), 1.2 * std::exp(-0.2), 1e-12);
    EXPECT_NEAR(std::exp(s.log_lambda(0)), 0.9825, 5e-5);
    EXPECT_NEAR(rec.statistic_value, 1.0 + 1.2 * std::exp(-0.2), 1e-12);
}

TEST(ShiryaevRoberts, IncrementalMatchesBatch) {
    for (auto indicator : {SrIndicator::kCenter, SrIndicator::kNewest}) {
        for (std::uint64_t seed = 0; seed < 6; ++seed) {
            const auto events = random_events(seed, 150, 50.0, seed % 2 == 0);
            SrConfig cfg{12.0, 0.3, 1e12, indicator};
            SrState s(cfg);
            for (std::size_t n = 0; n < events.size(); ++n) {
                const double inc = s.update(events[n]).statistic_value;
                const double batch = sr_statistic_batch(std::span(events).first(n + 1), cfg);
                ASSERT_NEAR(inc, batch, 1e-9 * batch) << n;
            }
        }
    }
}

TEST(ShiryaevRoberts, BallBoundaryIsInclusive) {
    SrState s({5.0, 0.5, 1e9});
    (void)s.update({0, 0, 1.0, 0});
    (void)s.update({3, 4, 2.0, 1});  // distance exactly 5
    EXPECT_NEAR(s.log_lambda(0), std::log1p(0.5) - 0.5 * 2.0 * 1.0 / 2.0, 1e-12);
    SrState t({4.999, 0.5, 1e9});
    (void)t.update({0, 0, 1.0, 0});
    (void)t.update({3, 4, 2.0, 1});
    EXPECT_NEAR(t.log_lambda(0), -0.5 * 1.0 * 1.0 / 2.0, 1e-12);
}

TEST(ShiryaevRoberts, TranslationInvariant) {
    const auto events = random_events(3, 120, 40.0, false);
    SrState a({8.0, 0.2, 1e9}), b({8.0, 0.2, 1e9});
    for (auto e : events) {
        const double ra = a.update(e).statistic_value;
        e.x += 1234.5;
        e.y -= 987.25;
        EXPECT_NEAR(b.update(e).statistic_value, ra, 1e-9 * ra);
    }
}

TEST(ShiryaevRoberts, RejectsOutOfOrderEvents) {
    SrState s({1.0, 0.2, 30.0});
    (void)s.update({0, 0, 5.0, 0});
    EXPECT_THROW((void)s.update({0, 0, 4.0, 1}), std::invalid_argument);
    EXPECT_THROW((void)SrState({0.0, 0.2, 30.0}), std::invalid_argument);
}

TEST(ShiryaevRoberts, EmptyStreamAndSplitFold) {
    EXPECT_TRUE(sr_run(EventStream({}, 10.0), {1.0, 0.2, 30.0}).records.empty());
    auto events = random_events(11, 400, 30.0, false);
    for (auto& e : events) e.x *= 0.2;  // crowd events so an alarm occurs
    const SrConfig cfg{6.0, 0.5, 30.0};
    auto whole = sr_run(EventStream(events, kInf), cfg);
    SrState s(cfg);
    std::optional<std::size_t> split_alarm;
    for (std::size_t i = 0; i < events.size() && !split_alarm; ++i) {
        if (s.update(events[i]).alarm) split_alarm = i;
    }
    ASSERT_TRUE(whole.first_alarm.has_value());
    EXPECT_EQ(whole.first_alarm, split_alarm);
    EXPECT_EQ(whole.records.size(), *whole.first_alarm + 1);
}

TEST(ShiryaevRoberts, InControlRunLengthNearArl) {
    // Homogeneous Poisson process, one event per day on a 100 x 100 km square.
    const double arl = 30.0;
    double total_days = 0.0;
    const int runs = 100;
    for (int r = 0; r < runs; ++r) {
        auto eng = make_engine(2024, static_cast<std::uint64_t>(r));
        SrState s({20.0, 0.2, arl});
        double t = 0.0;
        for (std::size_t n = 0; n < 5000; ++n) {
            t += -std::log(1.0 - uniform01(eng));
            if (s.update({100.0 * uniform01(eng), 100.0 * uniform01(eng), t, n}).alarm) break;
        }
        total_days += t;
    }
    const double mean = total_days / runs;
    EXPECT_GT(mean, arl / 2.0);
    EXPECT_LT(mean, arl * 2.0);
}

TEST(ShiryaevRoberts, LocatesPlantedCluster) {
    // Three events per day on a 200 km square; after day 40 a third of them
    // fall in a 10 km box around (150, 60).
    auto eng = make_engine(99, 0);
    std::vector<Event> events;
    double t = 0.0;
    std::size_t idx = 0;
    while (t < 120.0) {
        t += -std::log(1.0 - uniform01(eng)) / 3.0;
        if (t > 40.0 && uniform01(eng) < 1.0 / 3.0) {
            events.push_back({150.0 + 10.0 * (uniform01(eng) - 0.5), 60.0 + 10.0 * (uniform01(eng) - 0.5), t, idx++});
        } else {
            events.push_back({200.0 * uniform01(eng), 200.0 * uniform01(eng), t, idx++});
        }
    }
    auto res = sr_run(EventStream(events, kInf), {15.0, 0.5, 200.0});
    ASSERT_TRUE(res.first_cluster.has_value());
    EXPECT_LT(std::hypot(res.first_cluster->x - 150.0, res.first_cluster->y - 60.0), 15.0);
    EXPECT_GE(res.first_cluster->start, 35.0);
    EXPECT_FALSE(res.first_cluster->members.empty());
    EXPECT_TRUE(res.records.back().detail.contains("cluster"));
}
