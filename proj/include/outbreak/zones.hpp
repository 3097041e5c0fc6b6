#pragma once

// Candidate zones (sets of regions) and space-time windows for the scan statistics.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "outbreak/common.hpp"
#include "outbreak/data_model.hpp"
#include "outbreak/random.hpp"

namespace outbreak {

/// Sorted, duplicate-free region indices.
using Zone = std::vector<std::size_t>;

namespace detail {

inline bool canonical_less(const Zone& a, const Zone& b) { return a.size() != b.size() ? a.size() < b.size() : a < b; }

}  // namespace detail

/// Zones in canonical order: by size, then lexicographically. Each zone may
/// record a parent (itself minus one region) so per-zone sums can be built
/// incrementally in one pass.
class ZoneSet {
public:
    ZoneSet() = default;

    /// `parents[i]` is the index in `zones` of zones[i] minus one region, or -1.
    explicit ZoneSet(std::vector<Zone> zones, const std::vector<std::ptrdiff_t>& parents = {}) {
        require(parents.empty() || parents.size() == zones.size(), "ZoneSet: parent list has the wrong length");
        for (auto& z : zones) {
            std::sort(z.begin(), z.end());
            z.erase(std::unique(z.begin(), z.end()), z.end());
            if (z.empty()) throw std::invalid_argument("zone must not be empty");
        }
        std::vector<std::size_t> order(zones.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return detail::canonical_less(zones[a], zones[b]); });
        std::vector<std::size_t> final_index(zones.size());
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (zones_.empty() || zones_.back() != zones[order[k]]) zones_.push_back(zones[order[k]]);
            final_index[order[k]] = zones_.size() - 1;
        }
        parent_.assign(zones_.size(), -1);
        added_.assign(zones_.size(), 0);
        for (std::size_t i = 0; i < parents.size(); ++i) {
            if (parents[i] < 0) continue;
            const std::size_t f = final_index[i], pf = final_index[static_cast<std::size_t>(parents[i])];
            if (parent_[f] >= 0 || zones_[pf].size() + 1 != zones_[f].size()) continue;
            Zone extra;
            std::set_difference(zones_[f].begin(), zones_[f].end(), zones_[pf].begin(), zones_[pf].end(),
                                std::back_inserter(extra));
            if (extra.size() != 1) continue;
            parent_[f] = static_cast<std::ptrdiff_t>(pf);
            added_[f] = extra.front();
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return zones_.size(); }
    [[nodiscard]] bool empty() const noexcept { return zones_.empty(); }
    [[nodiscard]] const Zone& operator[](std::size_t i) const { return zones_[i]; }
    [[nodiscard]] const std::vector<Zone>& zones() const noexcept { return zones_; }
    [[nodiscard]] auto begin() const { return zones_.begin(); }
    [[nodiscard]] auto end() const { return zones_.end(); }
    [[nodiscard]] bool contains(const Zone& z) const {
        auto sorted = z;
        std::sort(sorted.begin(), sorted.end());
        return std::binary_search(zones_.begin(), zones_.end(), sorted, detail::canonical_less);
    }
    [[nodiscard]] std::size_t max_region() const {
        std::size_t m = 0;
        for (const auto& z : zones_) m = std::max(m, z.back());
        return m;
    }

    /// Sum of per-region values over every zone, in zone order.
    [[nodiscard]] std::vector<double> zone_sums(std::span<const double> region_values) const {
        std::vector<double> out(zones_.size());
        for (std::size_t z = 0; z < zones_.size(); ++z) {
            if (parent_[z] >= 0) {
                out[z] = out[static_cast<std::size_t>(parent_[z])] + region_values[added_[z]];
            } else {
                double s = 0.0;
                for (auto i : zones_[z]) s += region_values[i];
                out[z] = s;
            }
        }
        return out;
    }

private:
    std::vector<Zone> zones_;
    std::vector<std::ptrdiff_t> parent_;
    std::vector<std::size_t> added_;
};

/// Every non-empty subset of n regions (exhaustive scans on small problems).
[[nodiscard]] inline ZoneSet all_subsets(std::size_t n) {
    require(n >= 1 && n <= 20, "all_subsets: n must lie in [1, 20]");
    std::vector<Zone> out;
    std::vector<std::ptrdiff_t> parents;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        Zone z;
        for (std::size_t b = 0; b < n; ++b) {
            if (mask >> b & 1u) z.push_back(b);
        }
        out.push_back(std::move(z));
        const std::uint32_t low = mask & (mask - 1);
        parents.push_back(low == 0 ? -1 : static_cast<std::ptrdiff_t>(low) - 1);
    }
    return ZoneSet(std::move(out), parents);
}

/// Regions ordered by distance from `center` (ties by index), center first.
[[nodiscard]] inline std::vector<std::size_t> neighbour_order(const StudyGeometry& g, std::size_t center) {
    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (a == center || b == center) return a == center && b != center;
        const double da = g.distance(center, a), db = g.distance(center, b);
        return da != db ? da < db : a < b;
    });
    return order;
}

/// Each center with its 0..k_max nearest neighbours.
[[nodiscard]] inline ZoneSet knn_zones(const StudyGeometry& g, std::size_t k_max) {
    require(k_max < g.size(), "knn_zones: K_max must be smaller than the number of regions");
    std::vector<Zone> out;
    std::vector<std::ptrdiff_t> parents;
    for (std::size_t c = 0; c < g.size(); ++c) {
        const auto order = neighbour_order(g, c);
        for (std::size_t k = 0; k <= k_max; ++k) {
            parents.push_back(k == 0 ? -1 : static_cast<std::ptrdiff_t>(out.size()) - 1);
            out.emplace_back(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k + 1));
        }
    }
    return ZoneSet(std::move(out), parents);
}

/// Nearest-neighbour zones grown until the next neighbour would push the zone
/// population above fraction * total. The center alone is always a zone.
[[nodiscard]] inline ZoneSet population_capped_zones(const StudyGeometry& g, double fraction = 0.5,
                                                     std::size_t max_size = static_cast<std::size_t>(-1)) {
    require(fraction > 0.0 && fraction <= 1.0, "population_capped_zones: fraction must lie in (0, 1]");
    const double cap = fraction * g.total_population();
    std::vector<Zone> out;
    std::vector<std::ptrdiff_t> parents;
    for (std::size_t c = 0; c < g.size(); ++c) {
        const auto order = neighbour_order(g, c);
        double pop = g.population(c);
        out.push_back({c});
        parents.push_back(-1);
        for (std::size_t k = 1; k < order.size() && k < max_size; ++k) {
            pop += g.population(order[k]);
            if (pop > cap * (1.0 + 1e-12)) break;
            parents.push_back(static_cast<std::ptrdiff_t>(out.size()) - 1);
            out.emplace_back(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k + 1));
        }
    }
    return ZoneSet(std::move(out), parents);
}

inline constexpr std::size_t kMaxFlexibleZones = 1'000'000;

namespace detail {

// Connected subsets containing the root: branch on "include v" / "exclude v for
// good", so each connected set is reached by exactly one path.
inline void connected_subsets(const StudyGeometry& g, const std::vector<char>& allowed, Zone& current,
                              std::vector<std::size_t> candidates, std::vector<char>& blocked, std::vector<Zone>& out,
                              std::vector<std::ptrdiff_t>& parents, std::ptrdiff_t parent, std::size_t cap) {
    const auto self = static_cast<std::ptrdiff_t>(out.size());
    out.push_back(current);
    parents.push_back(parent);
    if (out.size() > cap) return;
    std::vector<std::size_t> undo;
    while (!candidates.empty()) {
        const std::size_t v = candidates.front();
        candidates.erase(candidates.begin());
        std::vector<std::size_t> next = candidates;
        for (std::size_t u : g.neighbours(v)) {
            if (!allowed[u] || blocked[u]) continue;
            if (std::find(current.begin(), current.end(), u) != current.end()) continue;
            if (std::find(next.begin(), next.end(), u) != next.end()) continue;
            if (u == v) continue;
            next.push_back(u);
        }
        blocked[v] = 1;
        undo.push_back(v);
        current.push_back(v);
        // v may not re-enter deeper candidate lists of this branch either.
        connected_subsets(g, allowed, current, next, blocked, out, parents, self, cap);
        current.pop_back();
        if (out.size() > cap) break;
    }
    for (std::size_t v : undo) blocked[v] = 0;
}

}  // namespace detail

/// All adjacency-connected subsets of each center's (k_max + 1)-neighbourhood
/// that contain the center.
[[nodiscard]] inline ZoneSet flexible_zones(const StudyGeometry& g, std::size_t k_max, unsigned workers = 1,
                                            std::size_t cap = kMaxFlexibleZones) {
    require(g.has_adjacency(), "flexible_zones: geometry has no adjacency");
    require(k_max < g.size(), "flexible_zones: K_max must be smaller than the number of regions");
    std::vector<std::vector<Zone>> per_center(g.size());
    std::vector<std::vector<std::ptrdiff_t>> per_center_parents(g.size());
    parallel_for(g.size(), workers, [&](std::size_t c) {
        const auto order = neighbour_order(g, c);
        std::vector<char> allowed(g.size(), 0);
        for (std::size_t k = 0; k <= k_max; ++k) allowed[order[k]] = 1;
        std::vector<char> blocked(g.size(), 0);
        blocked[c] = 1;
        std::vector<std::size_t> start;
        for (std::size_t u : g.neighbours(c)) {
            if (allowed[u]) start.push_back(u);
        }
        Zone current{c};
        detail::connected_subsets(g, allowed, current, start, blocked, per_center[c], per_center_parents[c], -1, cap);
        if (per_center[c].size() > cap) {
            throw std::length_error("flexible_zones: more than " + std::to_string(cap) +
                                    " zones; reduce K_max");
        }
    });
    std::size_t total = 0;
    for (const auto& v : per_center) total += v.size();
    if (total > cap * 4) throw std::length_error("flexible_zones: zone count exceeds the cap; reduce K_max");
    std::vector<Zone> all;
    std::vector<std::ptrdiff_t> parents;
    all.reserve(total);
    parents.reserve(total);
    for (std::size_t c = 0; c < g.size(); ++c) {
        const auto offset = static_cast<std::ptrdiff_t>(all.size());
        for (auto p : per_center_parents[c]) parents.push_back(p < 0 ? -1 : p + offset);
        std::move(per_center[c].begin(), per_center[c].end(), std::back_inserter(all));
    }
    ZoneSet set(std::move(all), parents);
    if (set.size() > cap) throw std::length_error("flexible_zones: more than " + std::to_string(cap) + " zones; reduce K_max");
    return set;
}

/// Zone index crossed with a trailing duration; the window covers steps T-D+1..T.
struct SpaceTimeWindow {
    std::size_t zone = 0;
    int duration = 1;

    friend bool operator==(const SpaceTimeWindow&, const SpaceTimeWindow&) = default;
};

[[nodiscard]] inline std::vector<SpaceTimeWindow> windows(const ZoneSet& zones, int d_max) {
    require(!zones.empty(), "windows: zone set is empty");
    require(d_max >= 1, "windows: D_max must be at least 1");
    std::vector<SpaceTimeWindow> out;
    out.reserve(zones.size() * static_cast<std::size_t>(d_max));
    for (std::size_t z = 0; z < zones.size(); ++z) {
        for (int d = 1; d <= d_max; ++d) out.push_back({z, d});
    }
    return out;
}

enum class ZoneMethod { kKnn, kPopulationCap, kFlexible };

}  // namespace outbreak
