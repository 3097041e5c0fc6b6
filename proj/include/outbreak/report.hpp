#pragma once

// Output: JSON-lines records, CSV mirrors and dependency-free SVG plots
// (statistic trajectory with threshold, cluster maps).

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "outbreak/data_model.hpp"
#include "outbreak/eval.hpp"
#include "outbreak/pointproc.hpp"
#include "outbreak/zones.hpp"

namespace outbreak {

[[nodiscard]] inline nlohmann::json finite_or_tag(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

[[nodiscard]] inline nlohmann::json to_json(const AlarmRecord& r) {
    return {{"time_index", r.time_index},
            {"statistic", finite_or_tag(r.statistic_value)},
            {"threshold", finite_or_tag(r.threshold)},
            {"rule", r.rule == Comparison::kGreater ? ">" : "<="},
            {"alarm", r.alarm},
            {"detail", r.detail}};
}

inline void write_jsonl(std::ostream& out, const std::vector<AlarmRecord>& records) {
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

namespace detail {

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

inline std::string fmt(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

inline std::string zone_text(const nlohmann::json& d) {
    for (const char* key : {"mlc_zone_ids", "map_zone_ids", "mlc_zone", "map_zone"}) {
        if (!d.contains(key)) continue;
        std::string out;
        for (const auto& v : d[key]) {
            if (!out.empty()) out += ';';
            out += v.is_string() ? v.get<std::string>() : v.dump();
        }
        return out;
    }
    return "";
}

}  // namespace detail

/// One row per record: time, statistic, threshold, alarm, method, flagged zone.
inline void write_records_csv(std::ostream& out, const std::vector<AlarmRecord>& records) {
    out << "time_index,time,statistic,threshold,alarm,method,zone\n";
    for (const auto& r : records) {
        const auto& d = r.detail;
        const std::string time = d.contains("time") ? (d["time"].is_string() ? d["time"].get<std::string>() : d["time"].dump()) : "";
        out << r.time_index << ',' << detail::csv_quote(time) << ',' << detail::fmt(r.statistic_value) << ','
            << detail::fmt(r.threshold) << ',' << (r.alarm ? 1 : 0) << ','
            << detail::csv_quote(d.contains("method") ? d["method"].get<std::string>() : "") << ','
            << detail::csv_quote(detail::zone_text(d)) << '\n';
    }
}

inline void write_eval_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
    out << "detector,scenario,replicates,arl,arl_se,arl_censored,false_alarm_rate,false_alarm_probability,"
           "pre_onset_analyses,mean_delay,delay_se,detected,delay_censored,preempted,precision,recall\n";
    for (const auto& r : reports) {
        using detail::fmt;
        out << detail::csv_quote(r.detector) << ',' << detail::csv_quote(r.scenario) << ',' << r.replicates << ','
            << fmt(r.arl) << ',' << fmt(r.arl_se) << ',' << r.arl_censored << ',' << fmt(r.false_alarm_rate) << ','
            << fmt(r.false_alarm_probability) << ',' << r.pre_onset_analyses << ',' << fmt(r.mean_delay) << ','
            << fmt(r.delay_se) << ',' << r.detected << ',' << r.delay_censored << ',' << r.preempted << ','
            << fmt(r.precision) << ',' << fmt(r.recall) << '\n';
    }
}

// ------------------------------------------------------------------ SVG

struct PlotOptions {
    double width = 720.0, height = 320.0, margin = 48.0;
    std::string title;
    std::string y_label = "statistic";
};

/// Data-to-pixel mapping of the statistic plot.
struct PlotFrame {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    PlotOptions opt;

    [[nodiscard]] double px(double x) const { return opt.margin + (x - x0) / (x1 - x0) * (opt.width - 2.0 * opt.margin); }
    [[nodiscard]] double py(double y) const {
        return opt.height - opt.margin - (y - y0) / (y1 - y0) * (opt.height - 2.0 * opt.margin);
    }
};

/// Axis ranges covering every finite statistic and threshold; [0, 1] when empty.
[[nodiscard]] inline PlotFrame plot_frame(const std::vector<AlarmRecord>& records, const PlotOptions& opt = {}) {
    PlotFrame f;
    f.opt = opt;
    bool any_x = false, any_y = false;
    for (const auto& r : records) {
        const auto t = static_cast<double>(r.time_index);
        f.x0 = any_x ? std::min(f.x0, t) : t;
        f.x1 = any_x ? std::max(f.x1, t) : t;
        any_x = true;
        for (double v : {r.statistic_value, r.threshold}) {
            if (!std::isfinite(v)) continue;
            f.y0 = any_y ? std::min(f.y0, v) : v;
            f.y1 = any_y ? std::max(f.y1, v) : v;
            any_y = true;
        }
    }
    if (!any_x) f.x0 = 0.0, f.x1 = 1.0;
    if (!any_y) f.y0 = 0.0, f.y1 = 1.0;
    f.y0 = std::min(f.y0, 0.0);
    if (f.x1 <= f.x0) f.x1 = f.x0 + 1.0;
    if (f.y1 <= f.y0) f.y1 = f.y0 + 1.0;
    return f;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v;
    return s.str();
}

inline std::string svg_open(double w, double h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" viewBox=\"0 0 " +
           num(w) + ' ' + num(h) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace detail

/// Statistic vs time (solid polyline), threshold (dashed), alarms as red dots.
[[nodiscard]] inline std::string render_statistic_svg(const std::vector<AlarmRecord>& records, const PlotOptions& opt = {}) {
    using detail::num;
    const auto f = plot_frame(records, opt);
    std::ostringstream s;
    s << detail::svg_open(opt.width, opt.height);
    const double left = opt.margin, right = opt.width - opt.margin, top = opt.margin, bottom = opt.height - opt.margin;
    s << "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << num(left) << "\" y1=\"" << num(bottom) << "\" x2=\"" << num(right) << "\" y2=\"" << num(bottom) << "\"/>\n"
      << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\"" << num(bottom) << "\"/>\n"
      << "</g>\n";
    s << "<g font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<text x=\"" << num(left) << "\" y=\"" << num(bottom + 16) << "\">" << detail::fmt(f.x0) << "</text>\n"
      << "<text x=\"" << num(right) << "\" y=\"" << num(bottom + 16) << "\" text-anchor=\"end\">" << detail::fmt(f.x1) << "</text>\n"
      << "<text x=\"" << num(left - 4) << "\" y=\"" << num(bottom) << "\" text-anchor=\"end\">" << detail::fmt(f.y0) << "</text>\n"
      << "<text x=\"" << num(left - 4) << "\" y=\"" << num(top + 4) << "\" text-anchor=\"end\">" << detail::fmt(f.y1) << "</text>\n"
      << "<text x=\"" << num(left) << "\" y=\"" << num(top - 18) << "\">" << detail::xml_escape(opt.title) << "</text>\n"
      << "<text x=\"" << num(left) << "\" y=\"" << num(top - 4) << "\">" << detail::xml_escape(opt.y_label) << "</text>\n"
      << "</g>\n";
    if (!records.empty()) {
        s << "<polyline class=\"statistic\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (const auto& r : records) {
            if (!std::isfinite(r.statistic_value)) continue;
            s << (first ? "" : " ") << num(f.px(static_cast<double>(r.time_index))) << ',' << num(f.py(r.statistic_value));
            first = false;
        }
        s << "\"/>\n";
        bool constant = true;
        for (const auto& r : records) constant = constant && r.threshold == records.front().threshold;
        if (constant && std::isfinite(records.front().threshold)) {
            const double y = f.py(records.front().threshold);
            s << "<line class=\"threshold\" x1=\"" << num(left) << "\" y1=\"" << num(y) << "\" x2=\"" << num(right) << "\" y2=\""
              << num(y) << "\" stroke=\"firebrick\" stroke-dasharray=\"6,4\"/>\n";
        } else {
            s << "<polyline class=\"threshold\" fill=\"none\" stroke=\"firebrick\" stroke-dasharray=\"6,4\" points=\"";
            bool first_t = true;
            for (const auto& r : records) {
                if (!std::isfinite(r.threshold)) continue;
                s << (first_t ? "" : " ") << num(f.px(static_cast<double>(r.time_index))) << ',' << num(f.py(r.threshold));
                first_t = false;
            }
            s << "\"/>\n";
        }
        for (const auto& r : records) {
            if (!r.alarm || !std::isfinite(r.statistic_value)) continue;
            s << "<circle class=\"alarm\" cx=\"" << num(f.px(static_cast<double>(r.time_index))) << "\" cy=\""
              << num(f.py(r.statistic_value)) << "\" r=\"3\" fill=\"red\"/>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

/// Convex hull of points, counter-clockwise, collinear points dropped.
[[nodiscard]] inline std::vector<std::pair<double, double>> convex_hull(std::vector<std::pair<double, double>> p) {
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    if (p.size() < 3) return p;
    auto cross = [](const auto& o, const auto& a, const auto& b) {
        return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
    };
    std::vector<std::pair<double, double>> h(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
        h[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, lo = k + 1; i-- > 0;) {
        while (k >= lo && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
        h[k++] = p[i];
    }
    h.resize(k - 1);
    return h;
}

namespace detail {

// Maps km coordinates into the plot square, north up, equal scale on both axes.
struct MapFrame {
    double x0, y0, scale, margin, height;
    [[nodiscard]] double px(double x) const { return margin + (x - x0) * scale; }
    [[nodiscard]] double py(double y) const { return height - margin - (y - y0) * scale; }
};

inline MapFrame map_frame(double xmin, double xmax, double ymin, double ymax, const PlotOptions& opt) {
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
    const double room = std::min(opt.width, opt.height) - 2.0 * opt.margin;
    return {xmin, ymin, room / span, opt.margin, opt.height};
}

}  // namespace detail

/// Region centroids as dots; the flagged zone filled and outlined by its hull.
[[nodiscard]] inline std::string render_cluster_map(const StudyGeometry& g, const Zone& zone, PlotOptions opt = {}) {
    using detail::num;
    if (opt.width == PlotOptions{}.width) opt.width = opt.height = 480.0;
    double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
    for (std::size_t i = 0; i < g.size(); ++i) {
        xmin = std::min(xmin, g.x(i)), xmax = std::max(xmax, g.x(i));
        ymin = std::min(ymin, g.y(i)), ymax = std::max(ymax, g.y(i));
    }
    const auto f = detail::map_frame(xmin, xmax, ymin, ymax, opt);
    std::ostringstream s;
    s << detail::svg_open(opt.width, opt.height);
    s << "<text x=\"" << num(opt.margin) << "\" y=\"" << num(opt.margin / 2) << "\" font-family=\"sans-serif\" font-size=\"12\">"
      << detail::xml_escape(opt.title) << "</text>\n";
    std::vector<std::pair<double, double>> pts;
    for (auto i : zone) pts.emplace_back(f.px(g.x(i)), f.py(g.y(i)));
    const auto hull = convex_hull(pts);
    if (hull.size() >= 3) {
        s << "<polygon class=\"cluster\" fill=\"salmon\" fill-opacity=\"0.35\" stroke=\"firebrick\" points=\"";
        for (std::size_t k = 0; k < hull.size(); ++k) s << (k ? " " : "") << num(hull[k].first) << ',' << num(hull[k].second);
        s << "\"/>\n";
    } else if (hull.size() == 2) {
        s << "<line class=\"cluster\" stroke=\"firebrick\" stroke-width=\"3\" x1=\"" << num(hull[0].first) << "\" y1=\""
          << num(hull[0].second) << "\" x2=\"" << num(hull[1].first) << "\" y2=\"" << num(hull[1].second) << "\"/>\n";
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        const bool in = std::find(zone.begin(), zone.end(), i) != zone.end();
        s << "<circle cx=\"" << num(f.px(g.x(i))) << "\" cy=\"" << num(f.py(g.y(i))) << "\" r=\"" << (in ? "4" : "2")
          << "\" fill=\"" << (in ? "firebrick" : "gray") << "\"><title>" << detail::xml_escape(g.region_ids()[i])
          << "</title></circle>\n";
    }
    s << "</svg>\n";
    return s.str();
}

/// Events as dots and the alarm cylinder's disk as a circle.
[[nodiscard]] inline std::string render_event_map(const std::vector<Event>& events, const std::optional<SrCluster>& cluster,
                                                  PlotOptions opt = {}) {
    using detail::num;
    if (opt.width == PlotOptions{}.width) opt.width = opt.height = 480.0;
    double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
    for (const auto& e : events) {
        xmin = std::min(xmin, e.x), xmax = std::max(xmax, e.x);
        ymin = std::min(ymin, e.y), ymax = std::max(ymax, e.y);
    }
    if (events.empty()) xmin = ymin = 0.0, xmax = ymax = 1.0;
    const auto f = detail::map_frame(xmin, xmax, ymin, ymax, opt);
    std::ostringstream s;
    s << detail::svg_open(opt.width, opt.height);
    s << "<text x=\"" << num(opt.margin) << "\" y=\"" << num(opt.margin / 2) << "\" font-family=\"sans-serif\" font-size=\"12\">"
      << detail::xml_escape(opt.title) << "</text>\n";
    for (const auto& e : events) {
        s << "<circle cx=\"" << num(f.px(e.x)) << "\" cy=\"" << num(f.py(e.y)) << "\" r=\"1.5\" fill=\"gray\"/>\n";
    }
    if (cluster) {
        s << "<circle class=\"cluster\" cx=\"" << num(f.px(cluster->x)) << "\" cy=\"" << num(f.py(cluster->y)) << "\" r=\""
          << num(cluster->radius * f.scale) << "\" fill=\"salmon\" fill-opacity=\"0.3\" stroke=\"firebrick\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace outbreak
