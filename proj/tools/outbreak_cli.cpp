// outbreak: prospective outbreak detection from the command line.
//
//   outbreak detect   --counts c.csv --method farrington --from 2008-01
//   outbreak scan     --counts c.csv --geometry g.csv --method kulldorff --window 6
//   outbreak stcd     --events e.csv --projection lonlat --rho 75
//   outbreak eval     --scenario s.toml --reps 100
//   outbreak simulate --scenario s.toml --out counts.csv
//
// Records go to stdout (or --out) as JSON lines. Exit code 0 unless the
// configuration or data are invalid (2); --fail-on-alarm turns alarms into 1.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>

#include "outbreak/outbreak.hpp"

namespace {

using namespace outbreak;

struct Output {
    std::string out = "-";
    std::string csv;
    std::string plot;
    std::string map;
    bool fail_on_alarm = false;
};

struct Range {
    std::string from, to;
};

struct DetectOptions {
    std::string counts, method = "farrington", region, partition;
    int ears_k = 7;
    std::string ears_mode = "multiplier";
    double ears_multiplier = 3.0;
    std::optional<double> alpha;
    int farrington_b = 3, farrington_w = 3;
    std::string farrington_scale = "identity";
    bool farrington_no_trend = false;
    std::string baseline_start, policy = "expanding", threshold_mode = "scaled-f";
    int hotelling_replicates = 999;
    double arl = 36.0;
};

struct ScanOptions {
    std::string counts, geometry, adjacency, method = "kulldorff", zones = "knn", baseline;
    std::size_t k_max = 10;
    double pop_fraction = 0.5;
    std::size_t window = 6, history = 0, pool_depth = 0;
    int d_max = 1;
    double alpha = 0.05;
    int replicates = 999;
    std::string pvalue = "mc";
    double p_h1 = 1e-7, post_threshold = 0.5;
    double prior_shape = 1.0, prior_rate = 1.0;
    bool keep_windows = false;
};

struct StcdOptions {
    std::string events, projection = "planar", indicator = "center";
    double rho = 1.0, epsilon = 0.2, arl = 30.0;
    bool keep_going = false;
};

struct ScenarioOptions {
    std::string scenario, detector, out_geometry;
    std::optional<std::size_t> reps;
    std::size_t replicate = 0;
};

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// ------------------------------------------------------------------ helpers

std::optional<std::size_t> step_of(const CountPanel& p, const std::string& label) {
    if (label.empty()) return std::nullopt;
    const auto key = TimeAxis::parse_key(label, p.axis().format);
    if (!key) fail("cannot parse time '" + label + "'");
    const auto step = *key - p.axis().origin;
    if (step < 0 || step >= static_cast<std::int64_t>(p.steps())) fail("time '" + label + "' lies outside the data");
    return static_cast<std::size_t>(step);
}

template <typename E>
E pick(const std::string& value, const std::map<std::string, E>& choices, const std::string& what) {
    const auto it = choices.find(value);
    if (it == choices.end()) fail("unknown " + what + " '" + value + "'");
    return it->second;
}

void emit(const std::vector<AlarmRecord>& recs, const Output& o, const std::string& title) {
    if (o.out.empty() || o.out == "-") {
        write_jsonl(std::cout, recs);
    } else {
        std::ofstream f(o.out);
        if (!f) fail("cannot write '" + o.out + "'");
        write_jsonl(f, recs);
    }
    if (!o.csv.empty()) {
        std::ofstream f(o.csv);
        if (!f) fail("cannot write '" + o.csv + "'");
        write_records_csv(f, recs);
    }
    if (!o.plot.empty()) {
        std::ofstream f(o.plot);
        if (!f) fail("cannot write '" + o.plot + "'");
        f << render_statistic_svg(recs, {.title = title});
    }
}

int exit_code(const std::vector<AlarmRecord>& recs, const Output& o) {
    if (!o.fail_on_alarm) return 0;
    return std::any_of(recs.begin(), recs.end(), [](const AlarmRecord& r) { return r.alarm; }) ? 1 : 0;
}

void add_output(CLI::App* app, Output& o, bool with_map) {
    app->add_option("--out", o.out, "JSON-lines output (default stdout)");
    app->add_option("--csv", o.csv, "CSV mirror of the records");
    app->add_option("--plot", o.plot, "SVG plot of statistic and threshold");
    if (with_map) app->add_option("--map", o.map, "SVG map of the latest alarm's cluster");
    app->add_flag("--fail-on-alarm", o.fail_on_alarm, "exit with 1 when any analysis alarms");
}

void add_range(CLI::App* app, Range& r) {
    app->add_option("--from", r.from, "first analysis time (label as in the data)");
    app->add_option("--to", r.to, "last analysis time");
}

CountPanel load_counts(const std::string& path, const std::string& partition) {
    auto p = ingest_count_panel(path);
    if (partition.empty()) return p;
    std::ifstream in(partition);
    if (!in) fail("cannot open '" + partition + "'");
    return aggregate(p, RegionPartition::from_csv(in, p));
}

// ------------------------------------------------------------------ detectors

std::unique_ptr<PanelDetector> make_panel_detector(const DetectOptions& d, int period, SeriesSelector sel,
                                                   std::size_t baseline_start, std::size_t first, std::uint64_t seed) {
    if (d.method == "ears") {
        EarsConfig c;
        c.k = d.ears_k;
        c.mode = pick<EarsMode>(d.ears_mode, {{"multiplier", EarsMode::kMultiplier}, {"t", EarsMode::kTQuantile}}, "EARS mode");
        c.multiplier = d.ears_multiplier;
        if (d.alpha) c.alpha = *d.alpha;
        return std::make_unique<EarsDetector>(c, sel);
    }
    if (d.method == "farrington") {
        FarringtonConfig c;
        c.b = d.farrington_b;
        c.w = d.farrington_w;
        if (d.alpha) c.alpha = *d.alpha;
        c.scale = pick<glm::Scale>(d.farrington_scale,
                                   {{"identity", glm::Scale::kIdentity},
                                    {"sqrt", glm::Scale::kSqrt},
                                    {"two-thirds", glm::Scale::kTwoThirds},
                                    {"negbin", glm::Scale::kNegBinQuantile}},
                                   "Farrington scale");
        c.include_trend = !d.farrington_no_trend;
        return std::make_unique<FarringtonDetector>(c, period, sel);
    }
    if (d.method == "hotelling" || d.method == "cusum") {
        HotellingConfig c;
        if (d.alpha) c.alpha = *d.alpha;
        c.policy = pick<BaselinePolicy>(d.policy, {{"expanding", BaselinePolicy::kExpanding}, {"frozen", BaselinePolicy::kFrozen}},
                                        "baseline policy");
        c.threshold = pick<ThresholdMode>(d.threshold_mode, {{"scaled-f", ThresholdMode::kScaledF}, {"simulated", ThresholdMode::kSimulated}},
                                          "threshold mode");
        c.replicates = d.hotelling_replicates;
        c.seed = seed;
        if (d.method == "cusum") return std::make_unique<HotellingCusumDetector>(c, baseline_start, first, d.arl);
        return std::make_unique<HotellingDetector>(c, baseline_start, first);
    }
    fail("unknown detect method '" + d.method + "'");
}

ZoneSet build_zones(const ScanOptions& s, const StudyGeometry& g, unsigned workers) {
    const std::size_t k = std::min(s.k_max, g.size() - 1);
    if (s.zones == "knn") return knn_zones(g, k);
    if (s.zones == "population") return population_capped_zones(g, s.pop_fraction);
    if (s.zones == "flexible") {
        if (!g.has_adjacency()) fail("flexible zones need --adjacency");
        return flexible_zones(g, k, workers);
    }
    fail("unknown zone family '" + s.zones + "'");
}

ScanDetectorConfig scan_config(const ScanOptions& s, std::uint64_t seed, unsigned workers) {
    ScanDetectorConfig c;
    c.method = s.method;
    c.window_steps = s.window;
    c.history_steps = s.history;
    c.pool_depth = s.pool_depth;
    c.baseline = s.baseline.empty() ? BaselineKind::kPopulation
                                    : pick<BaselineKind>(s.baseline,
                                                         {{"population", BaselineKind::kPopulation},
                                                          {"permutation", BaselineKind::kPermutation},
                                                          {"history", BaselineKind::kHistory}},
                                                         "baseline");
    c.scan.d_max = s.d_max;
    c.scan.alpha = s.alpha;
    c.scan.keep_windows = s.keep_windows;
    c.scan.mc.replicates = s.replicates;
    c.scan.mc.seed = seed;
    c.scan.mc.workers = workers;
    c.scan.mc.mode = pick<PValueMode>(s.pvalue, {{"mc", PValueMode::kMonteCarlo}, {"gumbel", PValueMode::kGumbel}}, "P-value mode");
    c.priors.p_h1 = s.p_h1;
    c.priors.all = c.priors.outside = GammaPrior{s.prior_shape, s.prior_rate};
    c.bayes.d_max = s.d_max;
    c.bayes.threshold = s.post_threshold;
    c.bayes.workers = workers;
    return c;
}

// ------------------------------------------------------------------ scenario files

using ConfigMap = std::map<std::string, std::vector<std::string>>;

ConfigMap read_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open '" + path + "'");
    ConfigMap m;
    for (const auto& item : CLI::ConfigTOML().from_config(in)) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        m[item.fullname()] = item.inputs;
    }
    return m;
}

struct ScenarioFile {
    SimScenario scenario;
    std::size_t reps = 100, first = 0;
    ConfigMap raw;
};

std::string get(const ConfigMap& m, const std::string& key, const std::string& def) {
    const auto it = m.find(key);
    return it == m.end() || it->second.empty() ? def : it->second.front();
}

double to_number(const std::string& v, const std::string& what) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    fail(what + " is not a number: '" + v + "'");
}

double get_num(const ConfigMap& m, const std::string& key, double def) {
    const auto v = get(m, key, "");
    return v.empty() ? def : to_number(v, "scenario key '" + key + "'");
}

StudyGeometry grid_geometry(std::size_t side, double population) {
    std::vector<std::string> ids;
    std::vector<double> x, y, p;
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) {
            ids.push_back("g" + std::to_string(r * side + c));
            // a small shear keeps neighbour distances distinct
            x.push_back(10.0 * static_cast<double>(c) + 0.1 * static_cast<double>(r));
            y.push_back(10.0 * static_cast<double>(r));
            p.push_back(population);
        }
    }
    return StudyGeometry(ids, x, y, p);
}

ScenarioFile load_scenario(const std::string& path) {
    ScenarioFile f;
    f.raw = read_scenario(path);
    const auto& m = f.raw;
    auto& s = f.scenario;
    s.name = get(m, "name", "scenario");
    const auto geom = get(m, "geometry", "");
    if (!geom.empty()) {
        auto p = std::filesystem::path(geom);
        if (p.is_relative()) p = std::filesystem::path(path).parent_path() / p;
        s.geometry = ingest_geometry(p.string());
    } else {
        const auto side = static_cast<std::size_t>(get_num(m, "grid", 3));
        if (side < 2) fail("scenario grid must be at least 2");
        s.geometry = grid_geometry(side, get_num(m, "population", 100000));
    }
    s.steps = static_cast<std::size_t>(get_num(m, "steps", 52));
    s.period = static_cast<int>(get_num(m, "period", 52));
    s.model = pick<BaselineModel>(get(m, "model", "constant"),
                                  {{"constant", BaselineModel::kConstant},
                                   {"harmonic", BaselineModel::kHarmonic},
                                   {"population", BaselineModel::kPopulation}},
                                  "baseline model");
    s.level = get_num(m, "level", s.level);
    s.amplitude = get_num(m, "amplitude", s.amplitude);
    s.rate = get_num(m, "rate", s.rate);
    s.seed = static_cast<std::uint64_t>(get_num(m, "seed", 1));
    f.reps = static_cast<std::size_t>(get_num(m, "reps", 100));
    f.first = static_cast<std::size_t>(get_num(m, "first", 0));
    if (m.count("outbreak.zone")) {
        PlantedOutbreak o;
        for (const auto& z : m.at("outbreak.zone")) {
            if (auto idx = s.geometry.index_of(z)) {
                o.zone.push_back(*idx);
            } else {
                o.zone.push_back(static_cast<std::size_t>(to_number(z, "outbreak zone entry")));
            }
        }
        std::sort(o.zone.begin(), o.zone.end());
        o.onset = static_cast<std::size_t>(get_num(m, "outbreak.onset", 0));
        o.duration = static_cast<std::size_t>(get_num(m, "outbreak.duration", 0));
        o.q = get_num(m, "outbreak.q", 1.0);
        s.outbreak = o;
    }
    s.validate();
    return f;
}

DetectorFactory eval_factory(const std::string& method, const ScenarioFile& f, std::uint64_t seed) {
    const auto& m = f.raw;
    const auto& g = f.scenario.geometry;
    if (method == "ears" || method == "farrington" || method == "hotelling" || method == "cusum") {
        DetectOptions d;
        d.method = method;
        if (m.count("detector.alpha")) d.alpha = get_num(m, "detector.alpha", 0.05);
        d.farrington_b = static_cast<int>(get_num(m, "detector.b", 3));
        d.farrington_w = static_cast<int>(get_num(m, "detector.w", 3));
        return [d, first = f.first, period = f.scenario.period, seed](std::uint64_t r) {
            return make_panel_detector(d, period, {}, 0, first, seed + r);
        };
    }
    ScanOptions s;
    s.method = method;
    s.zones = get(m, "detector.zones", "knn");
    s.k_max = static_cast<std::size_t>(get_num(m, "detector.k_max", 4));
    s.window = static_cast<std::size_t>(get_num(m, "detector.window", 6));
    s.history = static_cast<std::size_t>(get_num(m, "detector.history", 0));
    s.d_max = static_cast<int>(get_num(m, "detector.d_max", 3));
    s.alpha = get_num(m, "detector.alpha", 0.05);
    s.replicates = static_cast<int>(get_num(m, "detector.replicates", 99));
    s.baseline = get(m, "detector.baseline", "");
    s.p_h1 = get_num(m, "detector.p_h1", s.p_h1);
    s.post_threshold = get_num(m, "detector.threshold", s.post_threshold);
    auto zones = std::make_shared<const ZoneSet>(build_zones(s, g, 1));
    const auto cfg = scan_config(s, seed, 1);
    return [cfg, g, zones](std::uint64_t r) {
        auto c = cfg;
        c.scan.mc.seed = cfg.scan.mc.seed + 1000003u * r;
        return std::make_unique<ScanDetector>(c, g, *zones);
    };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prospective outbreak detection for surveillance counts and point events"};
    app.set_version_flag("--version", std::string("outbreak ") + kVersion);
    app.set_config("--config", "", "configuration file (TOML or key = value); flags win");
    app.require_subcommand(1);
    app.fallthrough();  // --seed, --workers and --config may follow the command

    std::uint64_t seed = 1;
    unsigned workers = 1;
    app.add_option("--seed", seed, "master seed for every random draw")->capture_default_str();
    app.add_option("--workers", workers, "threads for replicate and window loops")->check(CLI::Range(1u, 256u));

    Output out;
    Range range;

    DetectOptions det;
    auto* detect = app.add_subcommand("detect", "univariate or multivariate detectors on a count panel");
    detect->add_option("--counts", det.counts, "long-format counts: region,time,count")->required()->check(CLI::ExistingFile);
    detect->add_option("--method", det.method, "ears | farrington | hotelling | cusum")->capture_default_str();
    detect->add_option("--region", det.region, "univariate: one region's series instead of the total");
    detect->add_option("--partition", det.partition, "region,group file; regions are summed into groups first")
        ->check(CLI::ExistingFile);
    detect->add_option("--ears-k", det.ears_k)->capture_default_str();
    detect->add_option("--ears-mode", det.ears_mode, "multiplier | t")->capture_default_str();
    detect->add_option("--ears-multiplier", det.ears_multiplier)->capture_default_str();
    detect->add_option("--alpha", det.alpha, "significance level (method default if absent)");
    detect->add_option("--farrington-b", det.farrington_b)->capture_default_str();
    detect->add_option("--farrington-w", det.farrington_w)->capture_default_str();
    detect->add_option("--farrington-scale", det.farrington_scale, "identity | sqrt | two-thirds | negbin")->capture_default_str();
    detect->add_flag("--farrington-no-trend", det.farrington_no_trend);
    detect->add_option("--baseline-start", det.baseline_start, "hotelling/cusum: first baseline time (default: first step)");
    detect->add_option("--policy", det.policy, "hotelling baseline: expanding | frozen")->capture_default_str();
    detect->add_option("--threshold", det.threshold_mode, "hotelling threshold: scaled-f | simulated")->capture_default_str();
    detect->add_option("--hotelling-replicates", det.hotelling_replicates)->capture_default_str();
    detect->add_option("--arl", det.arl, "cusum: target in-control ARL in steps")->capture_default_str();
    add_range(detect, range);
    add_output(detect, out, false);

    ScanOptions sc;
    auto* scan = app.add_subcommand("scan", "space-time scan statistics on a count panel");
    scan->add_option("--counts", sc.counts)->required()->check(CLI::ExistingFile);
    scan->add_option("--geometry", sc.geometry, "region,x_km,y_km,population or region,lon,lat,population")
        ->required()
        ->check(CLI::ExistingFile);
    scan->add_option("--adjacency", sc.adjacency, "region_a,region_b pairs (flexible zones)")->check(CLI::ExistingFile);
    scan->add_option("--method", sc.method, "kulldorff | permutation | eb-poisson | ltss | bayes")->capture_default_str();
    scan->add_option("--zones", sc.zones, "knn | population | flexible")->capture_default_str();
    scan->add_option("--k-max", sc.k_max)->capture_default_str();
    scan->add_option("--pop-fraction", sc.pop_fraction)->capture_default_str();
    scan->add_option("--window", sc.window, "steps of data per analysis (conditional baselines)")->capture_default_str();
    scan->add_option("--history", sc.history, "steps of history for expected counts (0 = all)")->capture_default_str();
    scan->add_option("--baseline", sc.baseline, "population | permutation | history (default by method)");
    scan->add_option("--d-max", sc.d_max, "longest window duration")->capture_default_str();
    scan->add_option("--alpha", sc.alpha)->capture_default_str();
    scan->add_option("--replicates", sc.replicates, "Monte Carlo replicates per analysis")->capture_default_str();
    scan->add_option("--pool-depth", sc.pool_depth, "earlier analyses whose replicates are pooled")->capture_default_str();
    scan->add_option("--pvalue", sc.pvalue, "mc | gumbel")->capture_default_str();
    scan->add_option("--p-h1", sc.p_h1, "bayes: prior outbreak probability")->capture_default_str();
    scan->add_option("--post-threshold", sc.post_threshold, "bayes: alarm when the MAP posterior exceeds this")->capture_default_str();
    scan->add_option("--prior-shape", sc.prior_shape, "bayes: gamma shape of the null/outside relative risk")->capture_default_str();
    scan->add_option("--prior-rate", sc.prior_rate, "bayes: gamma rate of the null/outside relative risk")->capture_default_str();
    scan->add_flag("--keep-windows", sc.keep_windows, "include every scored window in the output");
    add_range(scan, range);
    add_output(scan, out, true);

    StcdOptions st;
    auto* stcd = app.add_subcommand("stcd", "Shiryaev-Roberts detection on point events");
    stcd->add_option("--events", st.events, "x,y,time (planar km) or lon,lat,date")->required()->check(CLI::ExistingFile);
    stcd->add_option("--projection", st.projection, "planar | lonlat")->capture_default_str();
    stcd->add_option("--rho", st.rho, "cluster radius in km")->capture_default_str();
    stcd->add_option("--epsilon", st.epsilon, "relative intensity change")->capture_default_str();
    stcd->add_option("--arl", st.arl, "threshold on R_n")->capture_default_str();
    stcd->add_option("--indicator", st.indicator, "center | newest")->capture_default_str();
    stcd->add_flag("--keep-going", st.keep_going, "continue after the first alarm");
    add_range(stcd, range);
    add_output(stcd, out, true);

    ScenarioOptions so;
    auto* eval = app.add_subcommand("eval", "ARL, delay and spatial accuracy on simulated scenarios");
    eval->add_option("--scenario", so.scenario, "scenario TOML file")->required()->check(CLI::ExistingFile);
    eval->add_option("--reps", so.reps, "replicates (overrides the scenario)");
    eval->add_option("--detector", so.detector, "comma-separated detectors (default: scenario [detector] method or kulldorff)");
    eval->add_option("--out", out.out, "CSV report (default stdout)");

    auto* simulate_cmd = app.add_subcommand("simulate", "draw one panel from a scenario");
    simulate_cmd->add_option("--scenario", so.scenario)->required()->check(CLI::ExistingFile);
    simulate_cmd->add_option("--replicate", so.replicate)->capture_default_str();
    simulate_cmd->add_option("--out", out.out, "counts CSV (default stdout)");
    simulate_cmd->add_option("--geometry-out", so.out_geometry, "write the scenario geometry as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*detect) {
            const auto panel = load_counts(det.counts, det.partition);
            const auto first = step_of(panel, range.from).value_or(0);
            const auto last = step_of(panel, range.to).value_or(panel.steps() - 1);
            SeriesSelector sel;
            if (!det.region.empty()) {
                sel.region = panel.region_index(det.region);
                if (!sel.region) fail("unknown region '" + det.region + "'");
            }
            auto d = make_panel_detector(det, panel.axis().period, sel, step_of(panel, det.baseline_start).value_or(0),
                                         first, seed);
            const auto recs = run_prospective(panel, *d, first, last);
            emit(recs, out, d->name());
            return exit_code(recs, out);
        }
        if (*scan) {
            const auto panel = ingest_count_panel(sc.counts);
            auto geometry = ingest_geometry(sc.geometry).aligned_to(panel);
            if (!sc.adjacency.empty()) geometry = ingest_adjacency(sc.adjacency, geometry);
            const auto zones = build_zones(sc, geometry, workers);
            ScanDetector d(scan_config(sc, seed, workers), geometry, zones);
            const auto first = step_of(panel, range.from).value_or(d.min_time());
            const auto last = step_of(panel, range.to).value_or(panel.steps() - 1);
            const auto recs = run_prospective(panel, d, first, last);
            emit(recs, out, d.name());
            if (!out.map.empty()) {
                Zone z;
                for (auto it = recs.rbegin(); it != recs.rend(); ++it) {
                    if (!it->alarm) continue;
                    if (auto f = flagged_zone(*it)) z = *f;
                    break;
                }
                std::ofstream(out.map) << render_cluster_map(geometry, z, {.title = d.name()});
            }
            return exit_code(recs, out);
        }
        if (*stcd) {
            const auto projection = pick<Projection>(st.projection, {{"planar", Projection::kPlanar}, {"lonlat", Projection::kLonLat}},
                                                     "projection");
            const auto stream = ingest_events(st.events, projection);
            SrConfig cfg{st.rho, st.epsilon, st.arl,
                         pick<SrIndicator>(st.indicator, {{"center", SrIndicator::kCenter}, {"newest", SrIndicator::kNewest}}, "indicator")};
            auto bound = [&](const std::string& s, double def) {
                if (s.empty()) return def;
                if (auto d = parse_date_days(s)) return *d;
                return std::stod(s);
            };
            const double t0 = bound(range.from, -kInf), t1 = bound(range.to, kInf);
            std::vector<Event> window;
            for (std::size_t i = 0; i < stream.size(); ++i) {
                if (stream[i].t >= t0 && stream[i].t <= t1) window.push_back(stream[i]);
            }
            const auto res = sr_run(EventStream(window, stream.horizon(), stream.projection()), cfg, st.keep_going);
            auto recs = res.records;
            for (std::size_t i = 0; i < recs.size(); ++i) recs[i].detail["source_index"] = window[i].source_index;
            emit(recs, out, "shiryaev-roberts");
            if (!out.map.empty()) std::ofstream(out.map) << render_event_map(window, res.first_cluster, {.title = "shiryaev-roberts"});
            return exit_code(recs, out);
        }
        if (*eval) {
            auto f = load_scenario(so.scenario);
            if (app.count("--seed")) f.scenario.seed = seed;
            const std::size_t reps = so.reps.value_or(f.reps);
            std::string list = so.detector.empty() ? get(f.raw, "detector.method", "kulldorff") : so.detector;
            std::vector<EvalReport> reports;
            for (const auto& method : CLI::detail::split(list, ',')) {
                const auto factory = eval_factory(CLI::detail::trim_copy(method), f, f.scenario.seed);
                reports.push_back(evaluate(factory, f.scenario, {reps, f.first, workers}));
            }
            if (out.out.empty() || out.out == "-") {
                write_eval_csv(std::cout, reports);
            } else {
                std::ofstream o(out.out);
                if (!o) fail("cannot write '" + out.out + "'");
                write_eval_csv(o, reports);
            }
            return 0;
        }
        if (*simulate_cmd) {
            auto f = load_scenario(so.scenario);
            if (app.count("--seed")) f.scenario.seed = seed;
            const auto panel = simulate(f.scenario, so.replicate);
            if (out.out.empty() || out.out == "-") {
                write_count_panel(std::cout, panel);
            } else {
                std::ofstream o(out.out);
                if (!o) fail("cannot write '" + out.out + "'");
                write_count_panel(o, panel);
            }
            if (!so.out_geometry.empty()) {
                std::ofstream g(so.out_geometry);
                const auto& geo = f.scenario.geometry;
                g << "region,x_km,y_km,population\n" << std::setprecision(12);
                for (std::size_t i = 0; i < geo.size(); ++i) {
                    g << geo.region_ids()[i] << ',' << geo.x(i) << ',' << geo.y(i) << ',' << geo.population(i) << '\n';
                }
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
