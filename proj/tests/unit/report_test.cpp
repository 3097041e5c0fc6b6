#include <gtest/gtest.h>

#include <regex>

#include "outbreak/report.hpp"

using namespace outbreak;

namespace {

std::vector<std::pair<double, double>> polyline_points(const std::string& svg, const std::string& cls) {
    const std::regex re("<polyline class=\"" + cls + "\"[^>]*points=\"([^\"]*)\"");
    std::smatch m;
    std::vector<std::pair<double, double>> out;
    if (!std::regex_search(svg, m, re)) return out;
    std::istringstream in(m[1].str());
    std::string tok;
    while (in >> tok) {
        const auto c = tok.find(',');
        out.emplace_back(std::stod(tok.substr(0, c)), std::stod(tok.substr(c + 1)));
    }
    return out;
}

std::vector<AlarmRecord> ramp(std::size_t n, double threshold) {
    std::vector<AlarmRecord> r;
    for (std::size_t t = 0; t < n; ++t) r.push_back(AlarmRecord::make(static_cast<std::int64_t>(t + 3), 0.5 * static_cast<double>(t * t), threshold));
    return r;
}

}  // namespace

TEST(Svg, EmptyRecordsGiveEmptyAxes) {
    const auto svg = render_statistic_svg({});
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_NE(svg.find("class=\"axes\""), std::string::npos);
    EXPECT_EQ(svg.find("polyline"), std::string::npos);
}

TEST(Svg, MonotoneSeriesGivesMonotonePolyline) {
    const auto recs = ramp(12, 20.0);
    const auto pts = polyline_points(render_statistic_svg(recs), "statistic");
    ASSERT_EQ(pts.size(), recs.size());
    for (std::size_t k = 1; k < pts.size(); ++k) {
        EXPECT_GT(pts[k].first, pts[k - 1].first);
        EXPECT_LT(pts[k].second, pts[k - 1].second);  // SVG y grows downwards
    }
}

TEST(Svg, ThresholdLineAtConfiguredValue) {
    const auto recs = ramp(8, 7.25);
    const auto svg = render_statistic_svg(recs);
    const auto f = plot_frame(recs);
    std::smatch m;
    ASSERT_TRUE(std::regex_search(svg, m, std::regex("<line class=\"threshold\" x1=\"[^\"]*\" y1=\"([^\"]*)\"[^>]*stroke-dasharray")));
    EXPECT_NEAR(std::stod(m[1].str()), f.py(7.25), 0.01);
    // records above the threshold are marked
    std::size_t alarms = 0;
    for (const auto& r : recs) alarms += r.alarm;
    std::size_t dots = 0;
    for (auto p = svg.find("class=\"alarm\""); p != std::string::npos; p = svg.find("class=\"alarm\"", p + 1)) ++dots;
    EXPECT_EQ(dots, alarms);
}

TEST(Svg, VaryingThresholdIsDashedPolyline) {
    auto recs = ramp(5, 1.0);
    for (std::size_t k = 0; k < recs.size(); ++k) recs[k].threshold = 10.0 - static_cast<double>(k);
    const auto pts = polyline_points(render_statistic_svg(recs), "threshold");
    ASSERT_EQ(pts.size(), 5u);
    const auto f = plot_frame(recs);
    EXPECT_NEAR(pts[2].second, f.py(8.0), 0.01);
}

TEST(ConvexHull, SquareWithInteriorPoints) {
    const auto h = convex_hull({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.5, 0}});
    ASSERT_EQ(h.size(), 4u);
    EXPECT_EQ(h[0], (std::pair<double, double>{0, 0}));
    EXPECT_EQ(convex_hull({{2, 2}}).size(), 1u);
}

TEST(ClusterMap, MarksZoneRegions) {
    StudyGeometry g({"a", "b", "c", "d"}, {0, 10, 0, 10}, {0, 0, 10, 10}, {1, 1, 1, 1});
    const auto svg = render_cluster_map(g, {0, 1, 3}, {.title = "t<1>"});
    EXPECT_NE(svg.find("<polygon class=\"cluster\""), std::string::npos);
    EXPECT_NE(svg.find("t&lt;1&gt;"), std::string::npos);
    std::size_t red = 0;
    for (auto p = svg.find("fill=\"firebrick\""); p != std::string::npos; p = svg.find("fill=\"firebrick\"", p + 1)) ++red;
    EXPECT_EQ(red, 3u);
    const auto ev = render_event_map({}, std::nullopt);
    EXPECT_NE(ev.find("</svg>"), std::string::npos);
}

TEST(Csv, RecordsAndEvalReports) {
    auto r = AlarmRecord::make(4, 0.01, 0.05, Comparison::kLessEqual);
    r.detail = {{"time", "2008-01"}, {"method", "kulldorff"}, {"mlc_zone_ids", {"x", "y,z"}}};
    std::ostringstream out;
    write_records_csv(out, {r});
    EXPECT_EQ(out.str(), "time_index,time,statistic,threshold,alarm,method,zone\n4,2008-01,0.01,0.05,1,kulldorff,\"x;y,z\"\n");

    std::ostringstream js;
    write_jsonl(js, {r, AlarmRecord::make(5, kInf, 1.0)});
    std::istringstream lines(js.str());
    std::string line;
    std::getline(lines, line);
    EXPECT_EQ(nlohmann::json::parse(line)["rule"], "<=");
    std::getline(lines, line);
    EXPECT_EQ(nlohmann::json::parse(line)["statistic"], "inf");

    EvalReport e;
    e.detector = "ears";
    std::ostringstream ev;
    write_eval_csv(ev, {e});
    const auto text = ev.str();
    EXPECT_NE(text.find("\nears,,0,inf,0,0,0,0,0,inf,0,0,0,0,,\n"), std::string::npos);
}
