#pragma once

// Prospective analysis: detectors that see one growing panel prefix per
// analysis time, and the loop that feeds them.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "outbreak/bayes_scan.hpp"
#include "outbreak/data_model.hpp"
#include "outbreak/multivariate.hpp"
#include "outbreak/scan.hpp"
#include "outbreak/univariate.hpp"
#include "outbreak/zones.hpp"

namespace outbreak {

/// A detector invoked once per analysis time with the panel prefix 0..t.
class PanelDetector {
public:
    virtual ~PanelDetector() = default;
    virtual AlarmRecord analyse(const CountPanel& available, std::size_t t) = 0;
    /// Smallest t the detector can analyse.
    [[nodiscard]] virtual std::size_t min_time() const { return 0; }
    [[nodiscard]] virtual std::string name() const = 0;
};

using DetectorFactory = std::function<std::unique_ptr<PanelDetector>(std::uint64_t replicate)>;

/// Runs `detector` at t = first..last, each time on panel.until(t) only.
/// Times before detector.min_time() are skipped.
[[nodiscard]] inline std::vector<AlarmRecord> run_prospective(const CountPanel& panel, PanelDetector& detector,
                                                              std::size_t first, std::size_t last) {
    std::vector<AlarmRecord> out;
    if (first > last) return out;
    require(last < panel.steps(), "run_prospective: analysis range beyond the data");
    for (std::size_t t = std::max(first, detector.min_time()); t <= last; ++t) {
        auto rec = detector.analyse(panel.until(t), t);
        rec.time_index = static_cast<std::int64_t>(t);
        rec.detail["time"] = panel.axis().label(static_cast<std::int64_t>(t));
        out.push_back(std::move(rec));
    }
    return out;
}

// ------------------------------------------------------------------ univariate

/// Univariate detectors run on one region's series or on the panel total.
struct SeriesSelector {
    std::optional<std::size_t> region;

    [[nodiscard]] CountSeries pick(const CountPanel& p) const { return region ? p.series(*region) : p.total_series(); }
};

class EarsDetector final : public PanelDetector {
public:
    EarsDetector(EarsConfig config, SeriesSelector sel = {}) : config_(config), sel_(sel) { config_.validate(); }
    AlarmRecord analyse(const CountPanel& available, std::size_t t) override {
        return ears(sel_.pick(available), t, config_);
    }
    [[nodiscard]] std::size_t min_time() const override { return static_cast<std::size_t>(config_.k); }
    [[nodiscard]] std::string name() const override { return "ears"; }

private:
    EarsConfig config_;
    SeriesSelector sel_;
};

class FarringtonDetector final : public PanelDetector {
public:
    FarringtonDetector(FarringtonConfig config, int period, SeriesSelector sel = {})
        : config_(config), period_(period), sel_(sel) {
        config_.validate();
        require(period >= 1, "Farrington: period must be positive");
    }
    AlarmRecord analyse(const CountPanel& available, std::size_t t) override {
        return farrington(sel_.pick(available), t, config_);
    }
    [[nodiscard]] std::size_t min_time() const override { return static_cast<std::size_t>(config_.b * period_); }
    [[nodiscard]] std::string name() const override { return "farrington"; }

private:
    FarringtonConfig config_;
    int period_;
    SeriesSelector sel_;
};

// ------------------------------------------------------------------ multivariate

/// Hotelling T^2 of step t against steps baseline_start..first-1 (frozen) or
/// baseline_start..t-1 (expanding). Recomputed from the prefix each time.
class HotellingDetector final : public PanelDetector {
public:
    HotellingDetector(HotellingConfig config, std::size_t baseline_start, std::size_t first)
        : config_(config), start_(baseline_start), first_(first) {
        require(first > baseline_start + 1, "hotelling: baseline needs at least two steps");
    }
    AlarmRecord analyse(const CountPanel& available, std::size_t t) override {
        require(t >= first_, "hotelling: analysis before the monitoring start");
        const auto m = to_matrix(available);
        const auto end = config_.policy == BaselinePolicy::kFrozen ? first_ : t;
        MvBaseline base(m.middleRows(static_cast<Eigen::Index>(start_), static_cast<Eigen::Index>(end - start_)),
                        BaselinePolicy::kFrozen);
        if (config_.threshold == ThresholdMode::kSimulated && !fixed_) {
            fixed_ = simulated_threshold(m.middleRows(static_cast<Eigen::Index>(start_), static_cast<Eigen::Index>(first_ - start_)),
                                         config_.alpha, config_.replicates, config_.seed);
        }
        auto r = hotelling_t2(m.row(static_cast<Eigen::Index>(t)).transpose(), base, config_.alpha,
                              static_cast<std::int64_t>(t), fixed_);
        return r.record;
    }
    [[nodiscard]] std::size_t min_time() const override { return first_; }
    [[nodiscard]] std::string name() const override { return "hotelling"; }

private:
    HotellingConfig config_;
    std::size_t start_, first_;
    std::optional<double> fixed_;
};

/// Crosier CUSUM on sqrt(T^2), calibrated on hold-out samples of the initial baseline.
class HotellingCusumDetector final : public PanelDetector {
public:
    HotellingCusumDetector(HotellingConfig config, std::size_t baseline_start, std::size_t first, double target_arl)
        : hotelling_(config, baseline_start, first), config_(config), start_(baseline_start), first_(first), arl_(target_arl) {}
    AlarmRecord analyse(const CountPanel& available, std::size_t t) override {
        if (!state_) {
            const auto m = to_matrix(available);
            auto samples = holdout_t2_samples(
                m.middleRows(static_cast<Eigen::Index>(start_), static_cast<Eigen::Index>(first_ - start_)), 499, config_.seed);
            for (auto& s : samples) s = std::sqrt(s);
            state_ = calibrate_cusum(samples, arl_, 1000, config_.seed);
        }
        const auto h = hotelling_.analyse(available, t);
        auto rec = crosier_cusum(std::sqrt(h.statistic_value), *state_, static_cast<std::int64_t>(t));
        rec.detail["t2"] = h.statistic_value;
        rec.detail["k"] = state_->k;
        return rec;
    }
    [[nodiscard]] std::size_t min_time() const override { return first_; }
    [[nodiscard]] std::string name() const override { return "hotelling-cusum"; }

private:
    HotellingDetector hotelling_;
    HotellingConfig config_;
    std::size_t start_, first_;
    double arl_;
    std::optional<CusumState> state_;
};

// ------------------------------------------------------------------ scans

enum class BaselineKind { kPopulation, kPermutation, kHistory };

struct ScanDetectorConfig {
    std::string method = "kulldorff";  ///< kulldorff | permutation | eb-poisson | ltss | bayes
    std::size_t window_steps = 6;      ///< data used per analysis (conditional scans)
    std::size_t history_steps = 0;     ///< EB baselines; 0 = all earlier data
    BaselineKind baseline = BaselineKind::kPopulation;  ///< forced to kHistory for eb-poisson and ltss
    ScanConfig scan;
    std::size_t pool_depth = 0;
    OutbreakPriors priors;
    BayesScanConfig bayes;
};

class ScanDetector final : public PanelDetector {
public:
    ScanDetector(ScanDetectorConfig config, StudyGeometry geometry, ZoneSet zones)
        : config_(std::move(config)), geometry_(std::move(geometry)), zones_(std::move(zones)), pool_(config_.pool_depth),
          bayes_(config_.priors, config_.bayes) {
        const auto& m = config_.method;
        require(m == "kulldorff" || m == "permutation" || m == "eb-poisson" || m == "ltss" || m == "bayes",
                "scan: unknown method");
        require(config_.window_steps >= 1, "scan: window must cover at least one step");
        // Expectation-based statistics are only defined against history baselines.
        if (m == "eb-poisson" || m == "ltss") config_.baseline = BaselineKind::kHistory;
        require(d_max() >= 1, "scan: D_max must be at least 1");
    }

    AlarmRecord analyse(const CountPanel& available, std::size_t t) override {
        const auto analysis = analyses_++;
        const auto ti = static_cast<std::int64_t>(t);
        // History baselines: the block is the last d_max steps, expected counts
        // come from the steps before it. Otherwise the block is the last
        // window_steps steps and the baselines are fitted to the block itself.
        CountPanel block;
        CellMatrix base;
        if (history()) {
            const std::size_t scan_first = t + 1 - static_cast<std::size_t>(d_max());
            const std::size_t hist_first =
                config_.history_steps == 0 || config_.history_steps > scan_first ? 0 : scan_first - config_.history_steps;
            block = available.slice(scan_first, t);
            base = estimate_baselines_history(available.slice(hist_first, scan_first - 1), block.steps());
        } else {
            block = available.slice(t + 1 >= config_.window_steps ? t + 1 - config_.window_steps : 0, t);
            base = config_.baseline == BaselineKind::kPopulation ? estimate_baselines_population(block, geometry_)
                                                                 : estimate_baselines_permutation(block);
        }
        const auto counts = CellMatrix::from_panel(block);
        AlarmRecord rec;
        const auto& m = config_.method;
        if (m == "bayes") {
            rec = bayes_.analyse(counts, base, zones_, ti).record;
        } else if (m == "ltss") {
            rec = run_ltss(counts, base, config_.scan, &pool_, analysis, ti).record;
        } else {
            const auto sm = m == "kulldorff" ? ScanMethod::kKulldorff
                                             : m == "permutation" ? ScanMethod::kPermutation : ScanMethod::kEbPoisson;
            rec = run_scan(counts, base, zones_, with_method(sm), &pool_, analysis, ti).record;
        }
        label(rec);
        return rec;
    }

    [[nodiscard]] std::size_t min_time() const override { return history() ? static_cast<std::size_t>(d_max()) : 0; }
    [[nodiscard]] std::string name() const override { return config_.method; }

private:
    [[nodiscard]] bool history() const { return config_.baseline == BaselineKind::kHistory; }
    [[nodiscard]] int d_max() const { return config_.method == "bayes" ? config_.bayes.d_max : config_.scan.d_max; }
    [[nodiscard]] ScanConfig with_method(ScanMethod m) const {
        auto c = config_.scan;
        c.method = m;
        return c;
    }
    // Region ids alongside indices make the JSON readable without the geometry file.
    void label(AlarmRecord& rec) const {
        for (const char* key : {"mlc_zone", "map_zone"}) {
            if (!rec.detail.contains(key)) continue;
            auto ids = nlohmann::json::array();
            for (const auto& i : rec.detail[key]) ids.push_back(geometry_.region_ids().at(i.get<std::size_t>()));
            rec.detail[std::string(key) + "_ids"] = ids;
        }
    }

    ScanDetectorConfig config_;
    StudyGeometry geometry_;
    ZoneSet zones_;
    ReplicatePool pool_;
    BayesScanSequence bayes_;
    std::uint64_t analyses_ = 0;
};

}  // namespace outbreak
