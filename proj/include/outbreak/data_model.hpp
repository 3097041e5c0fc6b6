#pragma once

// Core data types and CSV ingestion for count panels, study geometry and point events.
//
// Time steps are consecutive integers; calendar labels (YYYY-MM, YYYY-Www) are only
// a presentation layer over them. All types validate on construction and are
// immutable afterwards.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "outbreak/common.hpp"

namespace outbreak {

// ------------------------------------------------------------------ time axis

enum class TimeFormat { kIndex, kMonth, kIsoWeek };

/// Maps consecutive integer steps to calendar labels.
struct TimeAxis {
    TimeFormat format = TimeFormat::kIndex;
    std::int64_t origin = 0;  ///< calendar key of step 0
    int period = 1;           ///< steps per seasonal cycle

    /// Calendar key of a label: the integer itself, year*12+month-1, or year*52+week-1.
    /// Returns nullopt when the label does not parse in this format.
    [[nodiscard]] static std::optional<std::int64_t> parse_key(std::string_view label, TimeFormat format) {
        auto to_int = [](std::string_view s) -> std::optional<std::int64_t> {
            std::int64_t v = 0;
            if (s.empty()) return std::nullopt;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
            return v;
        };
        switch (format) {
            case TimeFormat::kIndex:
                return to_int(label);
            case TimeFormat::kMonth: {
                if (label.size() != 7 || label[4] != '-') return std::nullopt;
                auto y = to_int(label.substr(0, 4));
                auto m = to_int(label.substr(5, 2));
                if (!y || !m || *m < 1 || *m > 12) return std::nullopt;
                return *y * 12 + (*m - 1);
            }
            case TimeFormat::kIsoWeek: {
                if (label.size() != 8 || label[4] != '-' || label[5] != 'W') return std::nullopt;
                auto y = to_int(label.substr(0, 4));
                auto w = to_int(label.substr(6, 2));
                // Week 53 has no slot in a 52-step season; callers must remap it before ingestion.
                if (!y || !w || *w < 1 || *w > 52) return std::nullopt;
                return *y * 52 + (*w - 1);
            }
        }
        return std::nullopt;
    }

    [[nodiscard]] static TimeFormat detect(std::string_view label) {
        if (label.size() == 8 && label[4] == '-' && label[5] == 'W') return TimeFormat::kIsoWeek;
        if (label.size() == 7 && label[4] == '-') return TimeFormat::kMonth;
        return TimeFormat::kIndex;
    }

    [[nodiscard]] static int default_period(TimeFormat format) {
        switch (format) {
            case TimeFormat::kMonth: return 12;
            case TimeFormat::kIsoWeek: return 52;
            case TimeFormat::kIndex: return 1;
        }
        return 1;
    }

    [[nodiscard]] std::int64_t key(std::int64_t step) const { return origin + step; }

    [[nodiscard]] std::string label(std::int64_t step) const {
        const std::int64_t k = key(step);
        char buf[32];
        switch (format) {
            case TimeFormat::kIndex:
                return std::to_string(k);
            case TimeFormat::kMonth:
                std::snprintf(buf, sizeof buf, "%04lld-%02lld", static_cast<long long>(k / 12),
                              static_cast<long long>(k % 12 + 1));
                return buf;
            case TimeFormat::kIsoWeek:
                std::snprintf(buf, sizeof buf, "%04lld-W%02lld", static_cast<long long>(k / 52),
                              static_cast<long long>(k % 52 + 1));
                return buf;
        }
        return std::to_string(k);
    }

    /// Step index of a label on this axis.
    [[nodiscard]] std::int64_t step_of(std::string_view label) const {
        auto k = parse_key(label, format);
        if (!k) throw std::invalid_argument("time label '" + std::string(label) + "' does not match the time axis");
        return *k - origin;
    }

    [[nodiscard]] TimeAxis shifted(std::int64_t steps) const {
        TimeAxis a = *this;
        a.origin += steps;
        return a;
    }
};

// ------------------------------------------------------------------ counts

/// Univariate count time series.
class CountSeries {
public:
    CountSeries() = default;
    CountSeries(std::vector<std::int64_t> values, TimeAxis axis) : values_(std::move(values)), axis_(axis) {
        if (values_.empty()) throw DataError("count series must have at least one value");
        if (axis_.period < 1) throw DataError("season length must be at least 1");
        for (auto v : values_) {
            if (v < 0) throw DataError("count series contains a negative count");
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::int64_t operator[](std::size_t t) const { return values_[t]; }
    [[nodiscard]] std::span<const std::int64_t> values() const noexcept { return values_; }
    [[nodiscard]] const TimeAxis& axis() const noexcept { return axis_; }
    [[nodiscard]] int period() const noexcept { return axis_.period; }

    /// Prefix containing steps 0..t.
    [[nodiscard]] CountSeries until(std::size_t t) const {
        require(t < values_.size(), "CountSeries::until: step out of range");
        return CountSeries({values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(t) + 1}, axis_);
    }

private:
    std::vector<std::int64_t> values_;
    TimeAxis axis_;
};

/// Dense region x time count matrix.
class CountPanel {
public:
    CountPanel() = default;
    CountPanel(std::vector<std::string> region_ids, std::size_t steps, std::vector<std::int64_t> counts, TimeAxis axis)
        : region_ids_(std::move(region_ids)), steps_(steps), counts_(std::move(counts)), axis_(axis) {
        if (region_ids_.empty() || steps_ == 0) throw DataError("count panel needs at least one region and one step");
        if (counts_.size() != region_ids_.size() * steps_) throw DataError("count panel size mismatch");
        std::set<std::string> seen;
        for (const auto& id : region_ids_) {
            if (!seen.insert(id).second) throw DataError("duplicate region id '" + id + "'");
        }
        for (auto c : counts_) {
            if (c < 0) throw DataError("count panel contains a negative count");
        }
    }

    [[nodiscard]] std::size_t regions() const noexcept { return region_ids_.size(); }
    [[nodiscard]] std::size_t steps() const noexcept { return steps_; }
    [[nodiscard]] const std::vector<std::string>& region_ids() const noexcept { return region_ids_; }
    [[nodiscard]] const TimeAxis& axis() const noexcept { return axis_; }

    [[nodiscard]] std::int64_t operator()(std::size_t region, std::size_t step) const {
        return counts_[region * steps_ + step];
    }
    [[nodiscard]] std::span<const std::int64_t> row(std::size_t region) const {
        return {counts_.data() + region * steps_, steps_};
    }
    [[nodiscard]] std::span<const std::int64_t> data() const noexcept { return counts_; }

    [[nodiscard]] std::int64_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

    [[nodiscard]] std::vector<std::int64_t> region_totals() const {
        std::vector<std::int64_t> out(regions(), 0);
        for (std::size_t i = 0; i < regions(); ++i) {
            for (auto c : row(i)) out[i] += c;
        }
        return out;
    }

    [[nodiscard]] std::vector<std::int64_t> step_totals() const {
        std::vector<std::int64_t> out(steps_, 0);
        for (std::size_t i = 0; i < regions(); ++i) {
            for (std::size_t t = 0; t < steps_; ++t) out[t] += (*this)(i, t);
        }
        return out;
    }

    [[nodiscard]] std::optional<std::size_t> region_index(std::string_view id) const {
        for (std::size_t i = 0; i < region_ids_.size(); ++i) {
            if (region_ids_[i] == id) return i;
        }
        return std::nullopt;
    }

    /// Columns [first, last] inclusive; the time axis is re-anchored at `first`.
    [[nodiscard]] CountPanel slice(std::size_t first, std::size_t last) const {
        require(first <= last && last < steps_, "CountPanel::slice: invalid step range");
        const std::size_t width = last - first + 1;
        std::vector<std::int64_t> out;
        out.reserve(regions() * width);
        for (std::size_t i = 0; i < regions(); ++i) {
            auto r = row(i);
            out.insert(out.end(), r.begin() + static_cast<std::ptrdiff_t>(first),
                       r.begin() + static_cast<std::ptrdiff_t>(last) + 1);
        }
        return CountPanel(region_ids_, width, std::move(out), axis_.shifted(static_cast<std::int64_t>(first)));
    }

    /// Everything observable at analysis step t: columns 0..t.
    [[nodiscard]] CountPanel until(std::size_t t) const { return slice(0, t); }

    [[nodiscard]] CountSeries series(std::size_t region) const {
        auto r = row(region);
        return CountSeries({r.begin(), r.end()}, axis_);
    }

    [[nodiscard]] CountSeries total_series() const { return CountSeries(step_totals(), axis_); }

private:
    std::vector<std::string> region_ids_;
    std::size_t steps_ = 0;
    std::vector<std::int64_t> counts_;
    TimeAxis axis_;
};

// ------------------------------------------------------------------ geometry

inline constexpr double kEarthRadiusKm = 6371.0;

/// Origin of the equirectangular projection (degrees).
struct ProjectionOrigin {
    double lon0 = 0.0;
    double lat0 = 0.0;

    [[nodiscard]] std::pair<double, double> project(double lon, double lat) const {
        constexpr double deg = kPi / 180.0;
        return {kEarthRadiusKm * (lon - lon0) * deg * std::cos(lat0 * deg), kEarthRadiusKm * (lat - lat0) * deg};
    }
};

class StudyGeometry {
public:
    StudyGeometry() = default;
    StudyGeometry(std::vector<std::string> region_ids, std::vector<double> x_km, std::vector<double> y_km,
                  std::vector<double> populations, std::vector<std::vector<std::size_t>> adjacency = {})
        : region_ids_(std::move(region_ids)),
          x_(std::move(x_km)),
          y_(std::move(y_km)),
          pop_(std::move(populations)),
          adjacency_(std::move(adjacency)) {
        const std::size_t n = region_ids_.size();
        if (n == 0) throw DataError("geometry has no regions");
        if (x_.size() != n || y_.size() != n || pop_.size() != n) throw DataError("geometry column length mismatch");
        std::set<std::string> seen;
        for (const auto& id : region_ids_) {
            if (!seen.insert(id).second) throw DataError("duplicate region id '" + id + "' in geometry");
        }
        for (double p : pop_) {
            if (!(p > 0.0) || !std::isfinite(p)) throw DataError("populations must be positive");
        }
        if (!adjacency_.empty()) {
            if (adjacency_.size() != n) throw DataError("adjacency must list every region");
            for (auto& nb : adjacency_) {
                std::sort(nb.begin(), nb.end());
                nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
            }
            for (std::size_t i = 0; i < n; ++i) {
                for (auto j : adjacency_[i]) {
                    if (j >= n) throw DataError("adjacency refers to an unknown region");
                    if (j == i) throw DataError("adjacency must be irreflexive: region '" + region_ids_[i] + "'");
                    if (!std::binary_search(adjacency_[j].begin(), adjacency_[j].end(), i)) {
                        throw DataError("adjacency must be symmetric");
                    }
                }
            }
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return region_ids_.size(); }
    [[nodiscard]] const std::vector<std::string>& region_ids() const noexcept { return region_ids_; }
    [[nodiscard]] double x(std::size_t i) const { return x_[i]; }
    [[nodiscard]] double y(std::size_t i) const { return y_[i]; }
    [[nodiscard]] double population(std::size_t i) const { return pop_[i]; }
    [[nodiscard]] std::span<const double> populations() const noexcept { return pop_; }
    [[nodiscard]] double total_population() const { return std::accumulate(pop_.begin(), pop_.end(), 0.0); }
    [[nodiscard]] bool has_adjacency() const noexcept { return !adjacency_.empty(); }
    [[nodiscard]] const std::vector<std::size_t>& neighbours(std::size_t i) const { return adjacency_.at(i); }

    [[nodiscard]] double distance(std::size_t i, std::size_t j) const { return std::hypot(x_[i] - x_[j], y_[i] - y_[j]); }

    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view id) const {
        for (std::size_t i = 0; i < region_ids_.size(); ++i) {
            if (region_ids_[i] == id) return i;
        }
        return std::nullopt;
    }

    /// Geometry reordered to the panel's region order. Regions present in one but not
    /// the other are an error: a region without counts would silently act as all zeros.
    [[nodiscard]] StudyGeometry aligned_to(const CountPanel& panel) const {
        if (panel.regions() != size()) {
            throw DataError("geometry has " + std::to_string(size()) + " regions but the panel has " +
                            std::to_string(panel.regions()));
        }
        std::vector<std::size_t> order;
        for (const auto& id : panel.region_ids()) {
            auto idx = index_of(id);
            if (!idx) throw DataError("panel region '" + id + "' missing from geometry");
            order.push_back(*idx);
        }
        std::vector<std::size_t> inverse(size());
        for (std::size_t k = 0; k < order.size(); ++k) inverse[order[k]] = k;
        std::vector<std::string> ids;
        std::vector<double> x, y, p;
        std::vector<std::vector<std::size_t>> adj;
        for (auto o : order) {
            ids.push_back(region_ids_[o]);
            x.push_back(x_[o]);
            y.push_back(y_[o]);
            p.push_back(pop_[o]);
            if (has_adjacency()) {
                std::vector<std::size_t> nb;
                for (auto j : adjacency_[o]) nb.push_back(inverse[j]);
                adj.push_back(std::move(nb));
            }
        }
        return StudyGeometry(std::move(ids), std::move(x), std::move(y), std::move(p), std::move(adj));
    }

    [[nodiscard]] StudyGeometry with_adjacency(std::vector<std::vector<std::size_t>> adjacency) const {
        return StudyGeometry(region_ids_, x_, y_, pop_, std::move(adjacency));
    }

private:
    std::vector<std::string> region_ids_;
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> pop_;
    std::vector<std::vector<std::size_t>> adjacency_;
};

// ------------------------------------------------------------------ events

struct Event {
    double x = 0.0;  ///< km
    double y = 0.0;  ///< km
    double t = 0.0;  ///< days
    std::size_t source_index = 0;  ///< position in the input; breaks timestamp ties
};

class EventStream {
public:
    EventStream() = default;
    EventStream(std::vector<Event> events, double horizon, std::optional<ProjectionOrigin> origin = std::nullopt)
        : events_(std::move(events)), horizon_(horizon), origin_(origin) {
        std::stable_sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
            return a.t < b.t || (a.t == b.t && a.source_index < b.source_index);
        });
        for (const auto& e : events_) {
            if (!std::isfinite(e.x) || !std::isfinite(e.y) || !std::isfinite(e.t)) {
                throw DataError("event has non-finite coordinates", static_cast<long>(e.source_index));
            }
            if (e.t > horizon_) throw DataError("event time beyond the surveillance horizon", static_cast<long>(e.source_index));
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return events_.size(); }
    [[nodiscard]] bool empty() const noexcept { return events_.empty(); }
    [[nodiscard]] const Event& operator[](std::size_t i) const { return events_[i]; }
    [[nodiscard]] std::span<const Event> events() const noexcept { return events_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] const std::optional<ProjectionOrigin>& projection() const noexcept { return origin_; }

private:
    std::vector<Event> events_;
    double horizon_ = kInf;
    std::optional<ProjectionOrigin> origin_;
};

// ------------------------------------------------------------------ alarms

enum class Comparison { kGreater, kLessEqual };

/// One detector decision at one analysis time.
struct AlarmRecord {
    std::int64_t time_index = 0;
    double statistic_value = 0.0;
    double threshold = 0.0;
    Comparison rule = Comparison::kGreater;
    bool alarm = false;
    nlohmann::json detail = nlohmann::json::object();

    [[nodiscard]] static AlarmRecord make(std::int64_t t, double value, double threshold,
                                          Comparison rule = Comparison::kGreater) {
        AlarmRecord r;
        r.time_index = t;
        r.statistic_value = value;
        r.threshold = threshold;
        r.rule = rule;
        r.alarm = rule == Comparison::kGreater ? value > threshold : value <= threshold;
        return r;
    }
};

// ------------------------------------------------------------------ CSV ingestion

namespace csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

/// Header-addressed table; rows keep their 1-based line number for error messages.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<long> line_numbers;

    [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    }
    [[nodiscard]] std::size_t require_column(std::string_view name) const {
        auto c = column(name);
        if (!c) throw DataError("missing column '" + std::string(name) + "'");
        return *c;
    }
};

inline Table read(std::istream& in) {
    Table table;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || trim(line).front() == '#') continue;
        auto fields = split(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) throw DataError("wrong number of fields", line_no);
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (table.header.empty()) throw DataError("empty CSV input");
    return table;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read(in);
}

inline double to_double(const std::string& s, long row) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw DataError("cannot parse number '" + s + "'", row);
    return v;
}

inline std::int64_t to_int(const std::string& s, long row) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw DataError("cannot parse integer '" + s + "'", row);
    return v;
}

}  // namespace csv

struct CountSchema {
    std::string region = "region";
    std::string time = "time";
    std::string count = "count";
    std::optional<int> period;  ///< defaults from the time format (12 monthly, 52 weekly, 1 index)
};

/// Reads a long-format count table into a dense panel. Missing (region, time) cells
/// become 0; regions keep their order of first appearance.
inline CountPanel ingest_count_panel(std::istream& in, const CountSchema& schema = {}) {
    const auto table = csv::read(in);
    const auto rc = table.require_column(schema.region);
    const auto tc = table.require_column(schema.time);
    const auto cc = table.require_column(schema.count);
    if (table.rows.empty()) throw DataError("count table has no rows");

    const TimeFormat format = TimeAxis::detect(table.rows.front()[tc]);
    std::vector<std::string> regions;
    std::unordered_map<std::string, std::size_t> region_index;
    std::map<std::pair<std::size_t, std::int64_t>, std::int64_t> cells;
    std::int64_t min_key = std::numeric_limits<std::int64_t>::max();
    std::int64_t max_key = std::numeric_limits<std::int64_t>::min();
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const long line = table.line_numbers[r];
        auto key = TimeAxis::parse_key(row[tc], format);
        if (!key) throw DataError("unparseable time '" + row[tc] + "'", line);
        const auto count = csv::to_int(row[cc], line);
        if (count < 0) throw DataError("negative count", line);
        auto [it, inserted] = region_index.try_emplace(row[rc], regions.size());
        if (inserted) regions.push_back(row[rc]);
        if (!cells.emplace(std::make_pair(it->second, *key), count).second) {
            throw DataError("duplicate (region, time) = (" + row[rc] + ", " + row[tc] + ")", line);
        }
        min_key = std::min(min_key, *key);
        max_key = std::max(max_key, *key);
    }
    const auto steps = static_cast<std::size_t>(max_key - min_key + 1);
    std::vector<std::int64_t> dense(regions.size() * steps, 0);
    for (const auto& [cell, count] : cells) {
        dense[cell.first * steps + static_cast<std::size_t>(cell.second - min_key)] = count;
    }
    TimeAxis axis{format, min_key, schema.period.value_or(TimeAxis::default_period(format))};
    return CountPanel(std::move(regions), steps, std::move(dense), axis);
}

inline CountPanel ingest_count_panel(const std::string& path, const CountSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return ingest_count_panel(in, schema);
}

/// Canonical serialization: every cell, grouped by region, time ascending.
inline void write_count_panel(std::ostream& out, const CountPanel& panel) {
    out << "region,time,count\n";
    for (std::size_t i = 0; i < panel.regions(); ++i) {
        for (std::size_t t = 0; t < panel.steps(); ++t) {
            out << panel.region_ids()[i] << ',' << panel.axis().label(static_cast<std::int64_t>(t)) << ','
                << panel(i, t) << '\n';
        }
    }
}

/// Reads `region,x_km,y_km,population` or `region,lon,lat,population`. Longitude and
/// latitude are projected equirectangularly about the centroid of the listed regions.
inline StudyGeometry ingest_geometry(std::istream& in) {
    const auto table = csv::read(in);
    const auto rc = table.require_column("region");
    const auto pc = table.require_column("population");
    const bool planar = table.column("x_km").has_value();
    const auto xc = planar ? table.require_column("x_km") : table.require_column("lon");
    const auto yc = planar ? table.require_column("y_km") : table.require_column("lat");
    std::vector<std::string> ids;
    std::vector<double> xs, ys, pops;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const long line = table.line_numbers[r];
        ids.push_back(row[rc]);
        xs.push_back(csv::to_double(row[xc], line));
        ys.push_back(csv::to_double(row[yc], line));
        pops.push_back(csv::to_double(row[pc], line));
    }
    if (!planar && !ids.empty()) {
        const double n = static_cast<double>(ids.size());
        ProjectionOrigin origin{std::accumulate(xs.begin(), xs.end(), 0.0) / n,
                                std::accumulate(ys.begin(), ys.end(), 0.0) / n};
        for (std::size_t i = 0; i < ids.size(); ++i) {
            std::tie(xs[i], ys[i]) = origin.project(xs[i], ys[i]);
        }
    }
    return StudyGeometry(std::move(ids), std::move(xs), std::move(ys), std::move(pops));
}

inline StudyGeometry ingest_geometry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return ingest_geometry(in);
}

/// Adds adjacency from `region_a,region_b` rows (undirected).
inline StudyGeometry ingest_adjacency(std::istream& in, const StudyGeometry& geometry) {
    const auto table = csv::read(in);
    const auto ac = table.require_column("region_a");
    const auto bc = table.require_column("region_b");
    std::vector<std::vector<std::size_t>> adj(geometry.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto a = geometry.index_of(table.rows[r][ac]);
        auto b = geometry.index_of(table.rows[r][bc]);
        if (!a || !b) throw DataError("adjacency names an unknown region", table.line_numbers[r]);
        if (*a == *b) throw DataError("self-adjacency", table.line_numbers[r]);
        adj[*a].push_back(*b);
        adj[*b].push_back(*a);
    }
    return geometry.with_adjacency(std::move(adj));
}

inline StudyGeometry ingest_adjacency(const std::string& path, const StudyGeometry& geometry) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return ingest_adjacency(in, geometry);
}

enum class Projection { kPlanar, kLonLat };

/// Days since 1970-01-01 for an ISO date (YYYY-MM-DD).
inline std::optional<double> parse_date_days(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0;
    unsigned m = 0, d = 0;
    if (std::from_chars(s.data(), s.data() + 4, y).ec != std::errc{} ||
        std::from_chars(s.data() + 5, s.data() + 7, m).ec != std::errc{} ||
        std::from_chars(s.data() + 8, s.data() + 10, d).ec != std::errc{}) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return static_cast<double>(std::chrono::sys_days{ymd}.time_since_epoch().count());
}

/// Reads `x,y,time` (planar km, numeric days) or `lon,lat,date` (ISO dates).
/// Events after `horizon` are rejected; output is sorted by time with file order breaking ties.
inline EventStream ingest_events(std::istream& in, Projection projection, double horizon = kInf) {
    const auto table = csv::read(in);
    const bool lonlat = projection == Projection::kLonLat;
    const auto xc = table.require_column(lonlat ? "lon" : "x");
    const auto yc = table.require_column(lonlat ? "lat" : "y");
    const auto tc = lonlat ? (table.column("date") ? *table.column("date") : table.require_column("time"))
                           : table.require_column("time");
    std::vector<Event> events;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const long line = table.line_numbers[r];
        Event e;
        e.x = csv::to_double(row[xc], line);
        e.y = csv::to_double(row[yc], line);
        auto date = parse_date_days(row[tc]);
        e.t = date ? *date : csv::to_double(row[tc], line);
        e.source_index = r;
        if (e.t > horizon) throw DataError("event time beyond the declared horizon", line);
        events.push_back(e);
    }
    std::optional<ProjectionOrigin> origin;
    if (lonlat && !events.empty()) {
        double sx = 0.0, sy = 0.0;
        for (const auto& e : events) {
            sx += e.x;
            sy += e.y;
        }
        origin = ProjectionOrigin{sx / static_cast<double>(events.size()), sy / static_cast<double>(events.size())};
        for (auto& e : events) std::tie(e.x, e.y) = origin->project(e.x, e.y);
    }
    return EventStream(std::move(events), horizon, origin);
}

inline EventStream ingest_events(const std::string& path, Projection projection, double horizon = kInf) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return ingest_events(in, projection, horizon);
}

// ------------------------------------------------------------------ aggregation

/// Assignment of every region to exactly one group.
struct RegionPartition {
    std::vector<std::string> group_ids;
    std::vector<std::size_t> group_of;  ///< indexed by panel region

    [[nodiscard]] static RegionPartition identity(const CountPanel& panel) {
        RegionPartition p;
        p.group_ids = panel.region_ids();
        p.group_of.resize(panel.regions());
        std::iota(p.group_of.begin(), p.group_of.end(), std::size_t{0});
        return p;
    }

    [[nodiscard]] static RegionPartition single(const CountPanel& panel, std::string name = "all") {
        RegionPartition p;
        p.group_ids = {std::move(name)};
        p.group_of.assign(panel.regions(), 0);
        return p;
    }

    /// From `region,group` rows; every panel region must appear exactly once.
    [[nodiscard]] static RegionPartition from_csv(std::istream& in, const CountPanel& panel) {
        const auto table = csv::read(in);
        const auto rc = table.require_column("region");
        const auto gc = table.require_column("group");
        RegionPartition p;
        p.group_of.assign(panel.regions(), static_cast<std::size_t>(-1));
        std::map<std::string, std::size_t> groups;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            auto idx = panel.region_index(table.rows[r][rc]);
            if (!idx) throw DataError("partition names unknown region '" + table.rows[r][rc] + "'", table.line_numbers[r]);
            if (p.group_of[*idx] != static_cast<std::size_t>(-1)) {
                throw DataError("region '" + table.rows[r][rc] + "' assigned twice", table.line_numbers[r]);
            }
            auto [it, inserted] = groups.try_emplace(table.rows[r][gc], p.group_ids.size());
            if (inserted) p.group_ids.push_back(table.rows[r][gc]);
            p.group_of[*idx] = it->second;
        }
        for (std::size_t i = 0; i < panel.regions(); ++i) {
            if (p.group_of[i] == static_cast<std::size_t>(-1)) {
                throw DataError("region '" + panel.region_ids()[i] + "' missing from partition");
            }
        }
        return p;
    }
};

/// Sums regions into groups and consecutive steps into blocks of `time_block`.
/// A trailing partial block is kept. Blocks > 1 produce an index time axis.
inline CountPanel aggregate(const CountPanel& panel, const RegionPartition& partition, std::size_t time_block = 1) {
    require(time_block >= 1, "aggregate: time block must be >= 1");
    if (partition.group_of.size() != panel.regions()) throw DataError("partition does not cover the panel's regions");
    const std::size_t groups = partition.group_ids.size();
    const std::size_t steps = (panel.steps() + time_block - 1) / time_block;
    std::vector<std::int64_t> out(groups * steps, 0);
    for (std::size_t i = 0; i < panel.regions(); ++i) {
        const auto g = partition.group_of[i];
        if (g >= groups) throw DataError("partition group index out of range");
        for (std::size_t t = 0; t < panel.steps(); ++t) out[g * steps + t / time_block] += panel(i, t);
    }
    TimeAxis axis = panel.axis();
    if (time_block > 1) {
        const int period = panel.axis().period % static_cast<int>(time_block) == 0
                               ? panel.axis().period / static_cast<int>(time_block)
                               : 1;
        axis = TimeAxis{TimeFormat::kIndex, 0, period};
    }
    return CountPanel(partition.group_ids, steps, std::move(out), axis);
}

}  // namespace outbreak
