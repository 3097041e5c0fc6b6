#include <gtest/gtest.h>

#include <queue>
#include <random>

#include "outbreak/zones.hpp"

using namespace outbreak;

namespace {

StudyGeometry line(std::size_t n, std::vector<double> pop = {}) {
    std::vector<std::string> ids;
    std::vector<double> x, y;
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("r" + std::to_string(i));
        x.push_back(static_cast<double>(i));
        y.push_back(0.0);
        if (i > 0) {
            adj[i].push_back(i - 1);
            adj[i - 1].push_back(i);
        }
    }
    if (pop.empty()) pop.assign(n, 1.0);
    return StudyGeometry(ids, x, y, pop, adj);
}

StudyGeometry grid(std::size_t side, std::mt19937_64* jitter = nullptr) {
    std::vector<std::string> ids;
    std::vector<double> x, y, pop;
    std::vector<std::vector<std::size_t>> adj(side * side);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) {
            const std::size_t i = r * side + c;
            ids.push_back("g" + std::to_string(i));
            x.push_back(c + (jitter ? u(*jitter) : 0.0));
            y.push_back(r + (jitter ? u(*jitter) : 0.0));
            pop.push_back(1.0);
            if (c > 0) {
                adj[i].push_back(i - 1);
                adj[i - 1].push_back(i);
            }
            if (r > 0) {
                adj[i].push_back(i - side);
                adj[i - side].push_back(i);
            }
        }
    }
    return StudyGeometry(ids, x, y, pop, adj);
}

bool connected(const StudyGeometry& g, const Zone& z) {
    std::set<std::size_t> members(z.begin(), z.end()), seen{z.front()};
    std::queue<std::size_t> q;
    q.push(z.front());
    while (!q.empty()) {
        auto v = q.front();
        q.pop();
        for (auto u : g.neighbours(v)) {
            if (members.count(u) && seen.insert(u).second) q.push(u);
        }
    }
    return seen.size() == members.size();
}

// Brute force: every subset of each center's neighbourhood that holds the center and is connected.
std::set<Zone> flexible_oracle(const StudyGeometry& g, std::size_t k_max) {
    std::set<Zone> out;
    for (std::size_t c = 0; c < g.size(); ++c) {
        auto order = neighbour_order(g, c);
        order.resize(k_max + 1);
        for (std::uint32_t mask = 0; mask < (1u << k_max); ++mask) {
            Zone z{c};
            for (std::size_t b = 0; b < k_max; ++b) {
                if (mask >> b & 1u) z.push_back(order[b + 1]);
            }
            std::sort(z.begin(), z.end());
            if (connected(g, z)) out.insert(z);
        }
    }
    return out;
}

}  // namespace

TEST(KnnZones, ZeroNeighboursGivesSingletons) {
    auto z = knn_zones(line(4), 0);
    ASSERT_EQ(z.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(z[i], Zone{i});
}

TEST(KnnZones, CollinearTieGoesToLowerIndex) {
    auto z = knn_zones(line(3), 1);
    std::vector<Zone> expected{{0}, {1}, {2}, {0, 1}, {1, 2}};
    EXPECT_EQ(z.zones(), expected);
}

TEST(KnnZones, NestedInKAndContainCenters) {
    std::mt19937_64 rng(3);
    auto g = grid(4, &rng);
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        auto small = knn_zones(g, k), big = knn_zones(g, k + 1);
        for (const auto& z : small) EXPECT_TRUE(big.contains(z));
    }
    EXPECT_THROW((void)knn_zones(g, g.size()), std::invalid_argument);
}

TEST(KnnZones, DeterministicAcrossCalls) {
    auto g = grid(5);
    EXPECT_EQ(knn_zones(g, 6).zones(), knn_zones(g, 6).zones());
}

TEST(PopulationCappedZones, EqualPopulationsHalfCap) {
    auto z = population_capped_zones(line(4), 0.5);
    std::size_t largest = 0;
    for (const auto& zone : z) largest = std::max(largest, zone.size());
    EXPECT_EQ(largest, 2u);
    auto g = grid(5);
    largest = 0;
    for (const auto& zone : population_capped_zones(g, 0.5)) largest = std::max(largest, zone.size());
    EXPECT_EQ(largest, g.size() / 2);
}

TEST(PopulationCappedZones, DominantRegionKeepsItsSingleton) {
    auto z = population_capped_zones(line(3, {60, 20, 20}), 0.5);
    EXPECT_TRUE(z.contains({0}));
    EXPECT_FALSE(z.contains({0, 1}));
    EXPECT_TRUE(z.contains({1, 2}));
}

TEST(FlexibleZones, PathGraphAroundMiddle) {
    auto z = flexible_zones(line(3), 2);
    for (const Zone& expected : std::vector<Zone>{{1}, {0, 1}, {1, 2}, {0, 1, 2}}) EXPECT_TRUE(z.contains(expected));
    EXPECT_FALSE(z.contains({0, 2}));
}

TEST(FlexibleZones, StarGraphCountsLeafSubsets) {
    StudyGeometry star({"c", "a", "b", "d"}, {0, 1, -1, 0}, {0, 0, 0, 1}, {1, 1, 1, 1}, {{1, 2, 3}, {0}, {0}, {0}});
    auto z = flexible_zones(star, 3);
    std::size_t with_center = 0;
    for (const auto& zone : z) with_center += std::binary_search(zone.begin(), zone.end(), std::size_t{0});
    EXPECT_EQ(with_center, 8u);
}

TEST(FlexibleZones, ZeroNeighboursGivesSingletons) {
    EXPECT_EQ(flexible_zones(grid(3), 0).size(), 9u);
}

TEST(FlexibleZones, MatchesBruteForceOnRandomGrids) {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 10; ++rep) {
        auto g = grid(4, &rng);
        const std::size_t k = 1 + rep % 7;
        auto z = flexible_zones(g, k, 1 + rep % 3);
        auto oracle = flexible_oracle(g, k);
        EXPECT_EQ(std::set<Zone>(z.begin(), z.end()), oracle) << k;
        EXPECT_EQ(z.size(), oracle.size());
    }
}

TEST(FlexibleZones, ContainsConnectedKnnZones) {
    auto g = grid(4);
    auto flex = flexible_zones(g, 4);
    for (const auto& z : knn_zones(g, 4)) {
        if (connected(g, z)) {
            EXPECT_TRUE(flex.contains(z));
        }
    }
}

TEST(FlexibleZones, CapIsEnforced) {
    EXPECT_THROW((void)flexible_zones(grid(5), 12, 1, 1000), std::length_error);
}

TEST(Windows, CartesianProduct) {
    auto z = knn_zones(line(5), 0);
    EXPECT_EQ(windows(z, 3).size(), 15u);
    for (const auto& w : windows(z, 1)) EXPECT_EQ(w.duration, 1);
    EXPECT_THROW((void)windows(ZoneSet{}, 2), std::invalid_argument);
}

TEST(ZoneSet, IncrementalSumsMatchDirectSums) {
    std::mt19937_64 rng(21);
    auto g = grid(5, &rng);
    std::vector<double> values(g.size());
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (auto& v : values) v = u(rng);
    for (const auto& set : {knn_zones(g, 8), population_capped_zones(g, 0.5), flexible_zones(g, 5), all_subsets(6)}) {
        const auto sums = set.zone_sums(values);
        for (std::size_t z = 0; z < set.size(); ++z) {
            double direct = 0.0;
            for (auto i : set[z]) direct += values[i];
            EXPECT_NEAR(sums[z], direct, 1e-9);
        }
    }
    EXPECT_EQ(all_subsets(6).size(), 63u);
}
