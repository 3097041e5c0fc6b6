#pragma once

// Synthetic scenarios with planted outbreaks (E[Y_it] = q b_it inside the
// window) and the run-length / delay / spatial-accuracy evaluation of detectors.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "outbreak/common.hpp"
#include "outbreak/data_model.hpp"
#include "outbreak/pointproc.hpp"
#include "outbreak/prospective.hpp"
#include "outbreak/random.hpp"
#include "outbreak/scan.hpp"
#include "outbreak/zones.hpp"

namespace outbreak {

enum class BaselineModel { kConstant, kHarmonic, kPopulation };

/// q b_it in zone x [onset, onset + duration); duration 0 runs to the end.
struct PlantedOutbreak {
    Zone zone;
    std::size_t onset = 0;
    std::size_t duration = 0;
    double q = 1.0;

    [[nodiscard]] bool covers(std::size_t region, std::size_t t) const {
        return t >= onset && (duration == 0 || t < onset + duration) && std::binary_search(zone.begin(), zone.end(), region);
    }
};

struct SimScenario {
    std::string name = "scenario";
    StudyGeometry geometry;
    std::size_t steps = 52;
    int period = 52;
    BaselineModel model = BaselineModel::kConstant;
    double level = 10.0;      ///< constant and harmonic: mean count per cell
    double amplitude = 0.0;   ///< harmonic: relative seasonal amplitude, |a| < 1
    double rate = 1e-4;       ///< population: cases per person per step
    std::optional<PlantedOutbreak> outbreak;
    std::uint64_t seed = 1;

    void validate() const {
        require(geometry.size() > 0, "scenario: geometry has no regions");
        require(steps >= 1 && period >= 1, "scenario: steps and period must be positive");
        require(level >= 0.0 && rate >= 0.0, "scenario: baseline level must be non-negative");
        require(std::abs(amplitude) < 1.0, "scenario: harmonic amplitude must lie in (-1, 1)");
        if (outbreak) {
            require(outbreak->q >= 1.0, "scenario: relative risk q must be at least 1");
            require(!outbreak->zone.empty() && std::is_sorted(outbreak->zone.begin(), outbreak->zone.end()) &&
                        outbreak->zone.back() < geometry.size(),
                    "scenario: outbreak zone must be a sorted list of known regions");
            require(outbreak->onset < steps, "scenario: outbreak onset beyond the horizon");
        }
    }
};

/// b_it without the outbreak.
[[nodiscard]] inline CellMatrix scenario_baselines(const SimScenario& s) {
    s.validate();
    CellMatrix b(s.geometry.size(), s.steps, 0.0);
    for (std::size_t i = 0; i < b.regions; ++i) {
        for (std::size_t t = 0; t < b.steps; ++t) {
            switch (s.model) {
                case BaselineModel::kConstant: b(i, t) = s.level; break;
                case BaselineModel::kHarmonic:
                    b(i, t) = s.level * (1.0 + s.amplitude * std::sin(2.0 * kPi * static_cast<double>(t) / s.period));
                    break;
                case BaselineModel::kPopulation: b(i, t) = s.rate * s.geometry.population(i); break;
            }
        }
    }
    return b;
}

/// E[Y_it] including the outbreak.
[[nodiscard]] inline CellMatrix scenario_means(const SimScenario& s) {
    auto m = scenario_baselines(s);
    if (s.outbreak) {
        for (std::size_t i = 0; i < m.regions; ++i) {
            for (std::size_t t = 0; t < m.steps; ++t) {
                if (s.outbreak->covers(i, t)) m(i, t) *= s.outbreak->q;
            }
        }
    }
    return m;
}

/// One Poisson panel; cell (i, t) of replicate r always uses the same stream.
[[nodiscard]] inline CountPanel simulate(const SimScenario& s, std::uint64_t replicate = 0) {
    const auto m = scenario_means(s);
    std::vector<std::int64_t> c(m.regions * m.steps);
    for (std::size_t i = 0; i < m.regions; ++i) {
        for (std::size_t t = 0; t < m.steps; ++t) {
            auto eng = make_engine(s.seed, replicate, i * m.steps + t);
            c[i * m.steps + t] = poisson_sample(m(i, t), eng);
        }
    }
    return CountPanel(s.geometry.region_ids(), s.steps, std::move(c), TimeAxis{TimeFormat::kIndex, 0, s.period});
}

// ------------------------------------------------------------------ point process

/// Intensity q * lambda inside the disk during [onset, end).
struct PlantedCylinder {
    double x = 0.0, y = 0.0, radius = 1.0;
    double onset = 0.0, end = kInf;
    double q = 1.0;
};

struct PointScenario {
    double width = 100.0, height = 100.0;  ///< km
    double rate = 1.0;                     ///< events per time unit over the whole square
    double horizon = 100.0;
    std::optional<PlantedCylinder> cluster;
    std::uint64_t seed = 1;

    void validate() const {
        require(width > 0.0 && height > 0.0 && rate > 0.0 && horizon > 0.0, "point scenario: sizes and rate must be positive");
        if (cluster) {
            const auto& c = *cluster;
            require(c.q >= 1.0 && c.radius > 0.0, "point scenario: cluster needs q >= 1 and a positive radius");
            require(c.x - c.radius >= 0.0 && c.x + c.radius <= width && c.y - c.radius >= 0.0 && c.y + c.radius <= height,
                    "point scenario: cluster disk must lie inside the study square");
        }
    }
};

struct SimulatedEvents {
    EventStream stream;
    std::vector<bool> planted;  ///< by stream position: event from the intensity bump
};

/// Homogeneous background plus an independent process of intensity (q - 1)
/// lambda inside the cylinder, merged in time order.
[[nodiscard]] inline SimulatedEvents simulate_events(const PointScenario& s, std::uint64_t replicate = 0) {
    s.validate();
    std::vector<std::pair<Event, bool>> all;
    auto eng = make_engine(s.seed, replicate, 0);
    for (double t = 0.0;;) {
        t += -std::log(1.0 - uniform01(eng)) / s.rate;
        if (t > s.horizon) break;
        all.push_back({{s.width * uniform01(eng), s.height * uniform01(eng), t, 0}, false});
    }
    if (s.cluster && s.cluster->q > 1.0) {
        const auto& c = *s.cluster;
        const double extra = (c.q - 1.0) * s.rate * kPi * c.radius * c.radius / (s.width * s.height);
        auto ce = make_engine(s.seed, replicate, 1);
        const double stop = std::min(c.end, s.horizon);
        for (double t = c.onset;;) {
            t += -std::log(1.0 - uniform01(ce)) / extra;
            if (t >= stop) break;
            const double r = c.radius * std::sqrt(uniform01(ce));
            const double a = 2.0 * kPi * uniform01(ce);
            all.push_back({{c.x + r * std::cos(a), c.y + r * std::sin(a), t, 0}, true});
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first.t < b.first.t; });
    SimulatedEvents out;
    std::vector<Event> ev;
    for (std::size_t i = 0; i < all.size(); ++i) {
        all[i].first.source_index = i;
        ev.push_back(all[i].first);
        out.planted.push_back(all[i].second);
    }
    out.stream = EventStream(std::move(ev), s.horizon);
    return out;
}

// ------------------------------------------------------------------ evaluation

/// Metrics over replicates. Run lengths and delays are in analysis steps (panel
/// detectors) or time units (point process). Runs without the relevant alarm
/// are counted as censored, never imputed.
struct EvalReport {
    std::string detector;
    std::string scenario;
    std::size_t replicates = 0;

    // In-control run length: analyses from the first one up to and including the
    // first alarm before onset (or anywhere, without an outbreak).
    double arl = kInf;
    double arl_se = 0.0;
    std::size_t arl_censored = 0;

    // Per-analysis false-alarm rate before onset, and the share of replicates
    // with at least one false alarm by the horizon (or onset).
    double false_alarm_rate = 0.0;
    double false_alarm_probability = 0.0;
    std::size_t pre_onset_analyses = 0;

    // Delay of the first alarm given that it comes at or after onset.
    double mean_delay = kInf;
    double delay_se = 0.0;
    std::size_t detected = 0;
    std::size_t delay_censored = 0;   ///< no alarm from onset to the horizon
    std::size_t preempted = 0;        ///< first alarm was a false one

    // Flagged cluster vs the planted zone at the detecting alarm; NaN if never available.
    double precision = std::nan("");
    double recall = std::nan("");

    [[nodiscard]] nlohmann::json to_json() const {
        auto num = [](double v) -> nlohmann::json {
            if (std::isnan(v)) return nullptr;
            if (std::isinf(v)) return "inf";
            return v;
        };
        return {{"detector", detector},
                {"scenario", scenario},
                {"replicates", replicates},
                {"arl", num(arl)},
                {"arl_se", num(arl_se)},
                {"arl_censored", arl_censored},
                {"false_alarm_rate", false_alarm_rate},
                {"false_alarm_probability", false_alarm_probability},
                {"pre_onset_analyses", pre_onset_analyses},
                {"mean_delay", num(mean_delay)},
                {"delay_se", num(delay_se)},
                {"detected", detected},
                {"delay_censored", delay_censored},
                {"preempted", preempted},
                {"precision", num(precision)},
                {"recall", num(recall)}};
    }
};

/// Zone flagged by an alarm record, from whichever key the method writes.
[[nodiscard]] inline std::optional<Zone> flagged_zone(const AlarmRecord& rec) {
    for (const char* key : {"mlc_zone", "map_zone", "cluster_zone"}) {
        if (rec.detail.contains(key)) return rec.detail[key].get<Zone>();
    }
    return std::nullopt;
}

namespace detail {

struct RunSummary {
    std::size_t pre_analyses = 0, pre_alarms = 0;
    std::optional<double> first_alarm;  ///< time of the first alarm
    double first_time = 0.0;            ///< time of the first analysis
    double horizon = 0.0;               ///< time of the last analysis
    std::optional<double> precision, recall;
};

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double se_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

/// `step` converts a time difference into run-length units (1 for panel
/// analyses, where the run length counts the alarm step itself).
inline void aggregate(EvalReport& r, const std::vector<RunSummary>& runs, std::optional<double> onset, double step) {
    r.replicates = runs.size();
    std::vector<double> lengths, delays, precisions, recalls;
    std::size_t pre_alarms = 0, any_false = 0;
    for (const auto& run : runs) {
        r.pre_onset_analyses += run.pre_analyses;
        pre_alarms += run.pre_alarms;
        any_false += run.pre_alarms > 0;
        const bool false_first = run.first_alarm && (!onset || *run.first_alarm < *onset);
        if (false_first) {
            lengths.push_back(*run.first_alarm - run.first_time + step);
        } else {
            ++r.arl_censored;
        }
        if (!onset) continue;
        if (false_first) {
            ++r.preempted;
        } else if (run.first_alarm) {
            delays.push_back(*run.first_alarm - *onset);
            if (run.precision) precisions.push_back(*run.precision);
            if (run.recall) recalls.push_back(*run.recall);
        } else {
            ++r.delay_censored;
        }
    }
    if (!lengths.empty()) {
        r.arl = mean_of(lengths);
        r.arl_se = se_of(lengths);
    }
    r.false_alarm_rate = r.pre_onset_analyses ? static_cast<double>(pre_alarms) / static_cast<double>(r.pre_onset_analyses) : 0.0;
    r.false_alarm_probability = runs.empty() ? 0.0 : static_cast<double>(any_false) / static_cast<double>(runs.size());
    r.detected = delays.size();
    if (!delays.empty()) {
        r.mean_delay = mean_of(delays);
        r.delay_se = se_of(delays);
    }
    if (!precisions.empty()) r.precision = mean_of(precisions);
    if (!recalls.empty()) r.recall = mean_of(recalls);
}

}  // namespace detail

struct EvalConfig {
    std::size_t replicates = 100;
    std::size_t first = 0;  ///< first analysis step
    unsigned workers = 1;
};

/// Runs a fresh detector from `factory` prospectively over each replicate panel.
/// Replicates run in parallel; results are aggregated in replicate order.
[[nodiscard]] inline EvalReport evaluate(const DetectorFactory& factory, const SimScenario& scenario, const EvalConfig& config) {
    scenario.validate();
    require(config.replicates >= 1, "evaluate: need at least one replicate");
    require(config.first < scenario.steps, "evaluate: first analysis beyond the horizon");
    std::vector<detail::RunSummary> runs(config.replicates);
    std::string name;
    const auto onset = scenario.outbreak ? std::optional<double>(static_cast<double>(scenario.outbreak->onset)) : std::nullopt;
    parallel_for(config.replicates, config.workers, [&](std::size_t r) {
        auto det = factory(r);
        const auto panel = simulate(scenario, r);
        const auto recs = run_prospective(panel, *det, config.first, scenario.steps - 1);
        auto& run = runs[r];
        run.horizon = static_cast<double>(scenario.steps - 1);
        run.first_time = static_cast<double>(std::max(config.first, det->min_time()));
        for (const auto& rec : recs) {
            const auto t = static_cast<double>(rec.time_index);
            const bool pre = !onset || t < *onset;
            run.pre_analyses += pre;
            run.pre_alarms += pre && rec.alarm;
            if (!rec.alarm || run.first_alarm) continue;
            run.first_alarm = t;
            if (pre || !scenario.outbreak) continue;
            if (const auto z = flagged_zone(rec); z && !z->empty()) {
                const auto& truth = scenario.outbreak->zone;
                std::size_t hit = 0;
                for (auto i : *z) hit += std::binary_search(truth.begin(), truth.end(), i);
                run.precision = static_cast<double>(hit) / static_cast<double>(z->size());
                run.recall = static_cast<double>(hit) / static_cast<double>(truth.size());
            }
        }
        if (r == 0) name = det->name();
    });
    EvalReport rep;
    rep.detector = name;
    rep.scenario = scenario.name;
    detail::aggregate(rep, runs, onset, 1.0);
    return rep;
}

/// Shiryaev-Roberts over simulated event streams. Run lengths and delays are in
/// time units; precision and recall count planted events among the cluster
/// members and planted events already observed.
[[nodiscard]] inline EvalReport evaluate_sr(const SrConfig& sr, const PointScenario& scenario, const EvalConfig& config) {
    scenario.validate();
    require(config.replicates >= 1, "evaluate: need at least one replicate");
    std::vector<detail::RunSummary> runs(config.replicates);
    const auto onset = scenario.cluster ? std::optional<double>(scenario.cluster->onset) : std::nullopt;
    parallel_for(config.replicates, config.workers, [&](std::size_t r) {
        const auto sim = simulate_events(scenario, r);
        SrState state(sr);
        auto& run = runs[r];
        run.horizon = scenario.horizon;
        for (std::size_t i = 0; i < sim.stream.size(); ++i) {
            const auto rec = state.update(sim.stream[i]);
            const double t = sim.stream[i].t;
            const bool pre = !onset || t < *onset;
            run.pre_analyses += pre;
            run.pre_alarms += pre && rec.alarm;
            if (!rec.alarm || run.first_alarm) continue;
            run.first_alarm = t;
            if (pre || !scenario.cluster) continue;
            const auto c = state.cluster();
            std::size_t hit = 0, planted_so_far = 0;
            for (auto m : c.members) hit += sim.planted[m];
            for (std::size_t j = 0; j <= i; ++j) planted_so_far += sim.planted[j];
            if (!c.members.empty()) run.precision = static_cast<double>(hit) / static_cast<double>(c.members.size());
            if (planted_so_far) run.recall = static_cast<double>(hit) / static_cast<double>(planted_so_far);
        }
    });
    EvalReport rep;
    rep.detector = "shiryaev-roberts";
    rep.scenario = "point-process";
    detail::aggregate(rep, runs, onset, 0.0);
    return rep;
}

}  // namespace outbreak
