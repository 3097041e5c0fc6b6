#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "outbreak/data_model.hpp"

using namespace outbreak;

namespace {

CountPanel panel_from(const std::string& text) {
    std::istringstream in(text);
    return ingest_count_panel(in);
}

std::string serialize(const CountPanel& p) {
    std::ostringstream out;
    write_count_panel(out, p);
    return out.str();
}

}  // namespace

TEST(CountPanelIngest, FullTableBecomesDensePanel) {
    auto p = panel_from("region,time,count\nr1,1,3\nr1,2,0\nr1,3,4\nr2,1,1\nr2,2,5\nr2,3,9\n");
    ASSERT_EQ(p.regions(), 2u);
    ASSERT_EQ(p.steps(), 3u);
    EXPECT_EQ(p(0, 2), 4);
    EXPECT_EQ(p(1, 1), 5);
    EXPECT_EQ(p.total(), 22);
}

TEST(CountPanelIngest, MissingCellDensifiesToZero) {
    auto p = panel_from("region,time,count\nr1,1,3\nr1,2,1\nr1,3,4\nr2,1,1\nr2,2,5\n");
    EXPECT_EQ(p(1, 2), 0);
}

TEST(CountPanelIngest, DuplicateRowNamesTheRow) {
    try {
        panel_from("region,time,count\nr1,1,3\nr2,1,1\nr1,1,2\n");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_EQ(e.row(), 4);
        EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
    }
}

TEST(CountPanelIngest, RejectsNegativeCountsAndBadTimes) {
    EXPECT_THROW(panel_from("region,time,count\nr1,1,-3\n"), DataError);
    try {
        panel_from("region,time,count\nr1,2004-01,3\nr1,2004-13,1\n");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_EQ(e.row(), 3);
    }
    EXPECT_THROW(panel_from("region,when,count\nr1,1,3\n"), DataError);
}

TEST(CountPanelIngest, CalendarLabelsAndSeasonLength) {
    auto p = panel_from("region,time,count\na,2003-11,1\na,2004-02,2\n");
    EXPECT_EQ(p.steps(), 4u);
    EXPECT_EQ(p.axis().period, 12);
    EXPECT_EQ(p.axis().label(3), "2004-02");
    EXPECT_EQ(p.axis().step_of("2003-12"), 1);
    auto w = panel_from("region,time,count\na,2017-W51,1\na,2018-W02,2\n");
    EXPECT_EQ(w.steps(), 4u);
    EXPECT_EQ(w.axis().period, 52);
    EXPECT_EQ(w.axis().label(2), "2018-W01");
    EXPECT_THROW(panel_from("region,time,count\na,2017-W53,1\n"), DataError);
}

TEST(CountPanelIngest, CanonicalFilesRoundTripBitExactly) {
    const std::string canonical = "region,time,count\nr1,2004-01,3\nr1,2004-02,0\nr2,2004-01,7\nr2,2004-02,1\n";
    EXPECT_EQ(serialize(panel_from(canonical)), canonical);

    // Arbitrary valid files reach the canonical form after one pass.
    std::mt19937 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        std::ostringstream f;
        f << "region,time,count\n";
        std::vector<std::string> rows;
        for (int r = 0; r < 3; ++r) {
            for (int t = 0; t < 5; ++t) {
                if (rng() % 4 == 0) continue;
                rows.push_back("z" + std::to_string(r) + "," + std::to_string(10 + t) + "," + std::to_string(rng() % 9));
            }
        }
        rows.push_back("z0,10,1");
        rows.push_back("z0,14,2");
        std::shuffle(rows.begin(), rows.end(), rng);
        // Ensure the shuffled duplicates added above do not collide with generated rows.
        std::set<std::string> keys;
        std::vector<std::string> unique_rows;
        for (auto& r : rows) {
            auto key = r.substr(0, r.rfind(','));
            if (keys.insert(key).second) unique_rows.push_back(r);
        }
        for (auto& r : unique_rows) f << r << '\n';
        const auto once = serialize(panel_from(f.str()));
        EXPECT_EQ(serialize(panel_from(once)), once);
    }
}

TEST(Aggregate, MergeAllRegionsGivesColumnSums) {
    auto p = panel_from("region,time,count\nr1,1,3\nr1,2,1\nr2,1,1\nr2,2,5\nr3,1,2\nr3,2,2\n");
    auto merged = aggregate(p, RegionPartition::single(p));
    ASSERT_EQ(merged.regions(), 1u);
    EXPECT_EQ(merged(0, 0), 6);
    EXPECT_EQ(merged(0, 1), 8);
}

TEST(Aggregate, IdentityLeavesPanelUnchanged) {
    auto p = panel_from("region,time,count\nr1,1,3\nr1,2,1\nr2,1,1\nr2,2,5\n");
    auto same = aggregate(p, RegionPartition::identity(p), 1);
    EXPECT_EQ(serialize(same), serialize(p));
}

TEST(Aggregate, GrandTotalPreservedForRandomPartitions) {
    std::mt19937 rng(17);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng() % 12;
        const std::size_t steps = 1 + rng() % 10;
        std::vector<std::string> ids;
        std::vector<std::int64_t> counts;
        for (std::size_t i = 0; i < n; ++i) ids.push_back("r" + std::to_string(i));
        for (std::size_t k = 0; k < n * steps; ++k) counts.push_back(rng() % 20);
        CountPanel p(ids, steps, counts, {});
        RegionPartition part;
        const std::size_t groups = 1 + rng() % n;
        for (std::size_t g = 0; g < groups; ++g) part.group_ids.push_back("g" + std::to_string(g));
        for (std::size_t i = 0; i < n; ++i) part.group_of.push_back(i < groups ? i : rng() % groups);
        auto agg = aggregate(p, part, 1 + rng() % 4);
        EXPECT_EQ(agg.total(), p.total());
    }
}

TEST(Aggregate, PartitionMustCoverEveryRegionOnce) {
    auto p = panel_from("region,time,count\nr1,1,3\nr2,1,1\n");
    std::istringstream dup("region,group\nr1,a\nr1,b\nr2,a\n");
    EXPECT_THROW(RegionPartition::from_csv(dup, p), DataError);
    std::istringstream missing("region,group\nr1,a\n");
    EXPECT_THROW(RegionPartition::from_csv(missing, p), DataError);
    std::istringstream ok("region,group\nr1,a\nr2,a\n");
    EXPECT_EQ(aggregate(p, RegionPartition::from_csv(ok, p)).total(), 4);
}

TEST(EventIngest, PlanarSortedStreamIsUnchanged) {
    std::istringstream in("x,y,time\n0,0,1\n1,2,2.5\n3,1,4\n");
    auto s = ingest_events(in, Projection::kPlanar);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_DOUBLE_EQ(s[1].x, 1.0);
    EXPECT_DOUBLE_EQ(s[2].t, 4.0);
}

TEST(EventIngest, ReversedEventsAreSorted) {
    std::istringstream in("x,y,time\n5,5,9\n1,1,3\n");
    auto s = ingest_events(in, Projection::kPlanar);
    EXPECT_DOUBLE_EQ(s[0].t, 3.0);
    EXPECT_DOUBLE_EQ(s[1].x, 5.0);
}

TEST(EventIngest, TiesKeepFileOrderAndMultisetIsPreserved) {
    std::istringstream in("x,y,time\n1,0,2\n2,0,1\n3,0,2\n4,0,1\n");
    auto s = ingest_events(in, Projection::kPlanar);
    std::vector<double> xs;
    for (const auto& e : s.events()) xs.push_back(e.x);
    EXPECT_EQ(xs, (std::vector<double>{2, 4, 1, 3}));
}

TEST(EventIngest, LonLatAtCentroidProjectsToOrigin) {
    std::istringstream in("lon,lat,date\n6.0,50.0,2004-01-01\n8.0,52.0,2004-01-03\n7.0,51.0,2004-01-02\n");
    auto s = ingest_events(in, Projection::kLonLat);
    // The third event sits at the mean longitude/latitude.
    EXPECT_NEAR(s[1].x, 0.0, 1e-12);
    EXPECT_NEAR(s[1].y, 0.0, 1e-12);
    EXPECT_NEAR(s[2].y, kEarthRadiusKm * kPi / 180.0, 1e-9);
    EXPECT_DOUBLE_EQ(s[1].t - s[0].t, 1.0);
}

TEST(EventIngest, RejectsEventsBeyondHorizon) {
    std::istringstream in("x,y,time\n0,0,1\n0,0,50\n");
    EXPECT_THROW(ingest_events(in, Projection::kPlanar, 10.0), DataError);
}

TEST(Geometry, ValidatesPopulationsAndAdjacency) {
    EXPECT_THROW(StudyGeometry({"a", "b"}, {0, 1}, {0, 0}, {1, 0}), DataError);
    EXPECT_THROW(StudyGeometry({"a", "b"}, {0, 1}, {0, 0}, {1, 1}, {{1}, {}}), DataError);
    EXPECT_THROW(StudyGeometry({"a", "b"}, {0, 1}, {0, 0}, {1, 1}, {{0}, {}}), DataError);
    StudyGeometry g({"a", "b"}, {0, 3}, {0, 4}, {1, 1}, {{1}, {0}});
    EXPECT_DOUBLE_EQ(g.distance(0, 1), 5.0);
}

TEST(Geometry, AlignmentRequiresMatchingRegions) {
    auto p = panel_from("region,time,count\nb,1,3\na,1,1\n");
    StudyGeometry g({"a", "b"}, {0, 1}, {0, 0}, {10, 20}, {{1}, {0}});
    auto aligned = g.aligned_to(p);
    EXPECT_EQ(aligned.region_ids()[0], "b");
    EXPECT_DOUBLE_EQ(aligned.population(0), 20.0);
    StudyGeometry extra({"a", "b", "c"}, {0, 1, 2}, {0, 0, 0}, {1, 1, 1});
    EXPECT_THROW((void)extra.aligned_to(p), DataError);
}

TEST(AlarmRecord, AlarmFollowsComparisonRule) {
    EXPECT_TRUE(AlarmRecord::make(0, 5.0, 4.0).alarm);
    EXPECT_FALSE(AlarmRecord::make(0, 4.0, 4.0).alarm);
    EXPECT_TRUE(AlarmRecord::make(0, 0.01, 0.01, Comparison::kLessEqual).alarm);
}
