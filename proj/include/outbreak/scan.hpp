#pragma once

// Space-time scan statistics over prospective cylinders: the conditional
// (Kulldorff) Poisson scan, the space-time permutation scan, the
// expectation-based Poisson scan, Monte Carlo inference and LTSS.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "outbreak/common.hpp"
#include "outbreak/data_model.hpp"
#include "outbreak/distributions.hpp"
#include "outbreak/random.hpp"
#include "outbreak/zones.hpp"

namespace outbreak {

/// Region x step matrix of doubles (baselines, or counts as doubles).
struct CellMatrix {
    std::size_t regions = 0;
    std::size_t steps = 0;
    std::vector<double> values;

    CellMatrix() = default;
    CellMatrix(std::size_t n, std::size_t t, double fill = 0.0) : regions(n), steps(t), values(n * t, fill) {}

    [[nodiscard]] static CellMatrix from_panel(const CountPanel& p) {
        CellMatrix m(p.regions(), p.steps());
        for (std::size_t k = 0; k < m.values.size(); ++k) m.values[k] = static_cast<double>(p.data()[k]);
        return m;
    }

    [[nodiscard]] double& operator()(std::size_t i, std::size_t t) { return values[i * steps + t]; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t t) const { return values[i * steps + t]; }
    [[nodiscard]] double total() const { return std::accumulate(values.begin(), values.end(), 0.0); }
};

// ------------------------------------------------------------------ statistics

/// Conditional Poisson log likelihood ratio. With B normalized to Y this is
/// Y_W log(Y_W/B_W) + (Y-Y_W) log((Y-Y_W)/(B-B_W)) when Y_W > B_W, else 0.
[[nodiscard]] inline double kulldorff_log_lr(double y_w, double b_w, double y, double b) {
    require(y > 0.0 && b > 0.0, "kulldorff_log_lr: totals must be positive");
    require(b_w > 0.0, "kulldorff_log_lr: window baseline must be positive");
    if (b_w >= b) return 0.0;
    const double y_out = y - y_w, b_out = b - b_w;
    if (y_w / b_w <= y_out / b_out) return 0.0;
    return xlogy_ratio(y_w, b_w) + xlogy_ratio(y_out, b_out) - xlogy_ratio(y, b);
}

/// Expectation-based Poisson log likelihood ratio against q = 1.
[[nodiscard]] inline double eb_poisson_log_lr(double y_w, double b_w) {
    require(b_w > 0.0, "eb_poisson_log_lr: window baseline must be positive");
    if (y_w <= b_w) return 0.0;
    return y_w * std::log(y_w / b_w) - (y_w - b_w);
}

// ------------------------------------------------------------------ baselines

/// b_it = (Y / T) * Pop_i / Pop_total, constant in time.
[[nodiscard]] inline CellMatrix estimate_baselines_population(const CountPanel& panel, const StudyGeometry& geometry) {
    require(geometry.size() == panel.regions(), "baselines: geometry does not match the panel");
    const double y = static_cast<double>(panel.total());
    const double pop_total = geometry.total_population();
    CellMatrix b(panel.regions(), panel.steps());
    for (std::size_t i = 0; i < b.regions; ++i) {
        const double v = y / static_cast<double>(panel.steps()) * geometry.population(i) / pop_total;
        for (std::size_t t = 0; t < b.steps; ++t) b(i, t) = v;
    }
    return b;
}

/// b_it = (column total t) * (row total i) / Y.
[[nodiscard]] inline CellMatrix estimate_baselines_permutation(const CountPanel& panel) {
    const double y = static_cast<double>(panel.total());
    CellMatrix b(panel.regions(), panel.steps());
    if (y == 0.0) return b;
    const auto rows = panel.region_totals();
    const auto cols = panel.step_totals();
    for (std::size_t i = 0; i < b.regions; ++i) {
        for (std::size_t t = 0; t < b.steps; ++t) b(i, t) = static_cast<double>(cols[t]) * static_cast<double>(rows[i]) / y;
    }
    return b;
}

/// Per-region mean of `history` repeated over `steps` future steps (the
/// moving-average baseline for the expectation-based scan).
[[nodiscard]] inline CellMatrix estimate_baselines_history(const CountPanel& history, std::size_t steps) {
    CellMatrix b(history.regions(), steps);
    const auto rows = history.region_totals();
    for (std::size_t i = 0; i < b.regions; ++i) {
        const double v = static_cast<double>(rows[i]) / static_cast<double>(history.steps());
        for (std::size_t t = 0; t < steps; ++t) b(i, t) = v;
    }
    return b;
}

// ------------------------------------------------------------------ window search

enum class ScanMethod { kKulldorff, kPermutation, kEbPoisson };

[[nodiscard]] inline const char* to_string(ScanMethod m) {
    switch (m) {
        case ScanMethod::kKulldorff: return "kulldorff";
        case ScanMethod::kPermutation: return "permutation";
        case ScanMethod::kEbPoisson: return "eb-poisson";
    }
    return "?";
}

struct WindowScore {
    std::size_t zone = 0;
    int duration = 1;
    double statistic = 0.0;
    double y = 0.0;
    double b = 0.0;
};

namespace detail {

// Higher statistic wins; ties go to the smaller zone, then the shorter
// duration, then the lexicographically smaller zone (= lower canonical index).
inline bool better_window(const WindowScore& a, const WindowScore& b, const ZoneSet& zones) {
    if (a.statistic != b.statistic) return a.statistic > b.statistic;
    const auto sa = zones[a.zone].size(), sb = zones[b.zone].size();
    if (sa != sb) return sa < sb;
    if (a.duration != b.duration) return a.duration < b.duration;
    return a.zone < b.zone;
}

struct SearchResult {
    std::optional<WindowScore> best;
    std::vector<WindowScore> all;
};

// Evaluates every zone x duration cylinder ending at the last step. Windows
// with zero baseline are skipped.
inline SearchResult search_windows(const CellMatrix& counts, const CellMatrix& baselines, const ZoneSet& zones,
                                   int d_max, bool conditional, bool keep) {
    SearchResult out;
    const double y_total = counts.total();
    const double b_total = baselines.total();
    const int d_limit = std::min<int>(d_max, static_cast<int>(counts.steps));
    std::vector<double> ry(counts.regions, 0.0), rb(counts.regions, 0.0);
    for (int d = 1; d <= d_limit; ++d) {
        const std::size_t t = counts.steps - static_cast<std::size_t>(d);
        for (std::size_t i = 0; i < counts.regions; ++i) {
            ry[i] += counts(i, t);
            rb[i] += baselines(i, t);
        }
        const auto zy = zones.zone_sums(ry);
        const auto zb = zones.zone_sums(rb);
        for (std::size_t z = 0; z < zones.size(); ++z) {
            if (!(zb[z] > 0.0)) continue;
            WindowScore w{z, d, 0.0, zy[z], zb[z]};
            w.statistic = conditional ? kulldorff_log_lr(zy[z], zb[z], y_total, b_total) : eb_poisson_log_lr(zy[z], zb[z]);
            if (keep) out.all.push_back(w);
            if (w.statistic > 0.0 && (!out.best || better_window(w, *out.best, zones))) out.best = w;
        }
    }
    return out;
}

}  // namespace detail

// ------------------------------------------------------------------ replicate pool

/// Replicate maxima from the current analysis plus the most recent `depth` ones.
class ReplicatePool {
public:
    explicit ReplicatePool(std::size_t depth = 0) : depth_(depth) {}

    [[nodiscard]] std::size_t depth() const noexcept { return depth_; }
    [[nodiscard]] std::size_t pooled_size() const {
        std::size_t n = 0;
        for (const auto& v : past_) n += v.size();
        return n;
    }

    /// (1 + #{replicates > observed}) / (1 + number of replicates), counting pooled ones.
    [[nodiscard]] double p_value(double observed, std::span<const double> current) const {
        std::size_t above = 0, total = current.size();
        for (double r : current) above += r > observed;
        for (const auto& v : past_) {
            total += v.size();
            for (double r : v) above += r > observed;
        }
        return static_cast<double>(1 + above) / static_cast<double>(1 + total);
    }

    [[nodiscard]] std::vector<double> combined(std::span<const double> current) const {
        std::vector<double> all(current.begin(), current.end());
        for (const auto& v : past_) all.insert(all.end(), v.begin(), v.end());
        return all;
    }

    void rotate(std::vector<double> current) {
        if (depth_ == 0) return;
        past_.push_front(std::move(current));
        while (past_.size() > depth_) past_.pop_back();
    }

private:
    std::size_t depth_;
    std::deque<std::vector<double>> past_;
};

/// P-value over current and pooled replicates; the pool then absorbs `current`.
inline double pooled_pvalue(ReplicatePool& pool, std::vector<double> current, double observed) {
    const double p = pool.p_value(observed, current);
    pool.rotate(std::move(current));
    return p;
}

/// Survivor function at `observed` of a Gumbel fitted to the replicates by moments.
[[nodiscard]] inline double gumbel_pvalue(std::span<const double> replicates, double observed) {
    return dist::fit_gumbel(replicates).sf(observed);
}

/// A Gumbel fit needs two replicates that differ.
[[nodiscard]] inline bool has_spread(std::span<const double> replicates) {
    return replicates.size() >= 2 &&
           std::any_of(replicates.begin(), replicates.end(), [&](double r) { return r != replicates.front(); });
}

// ------------------------------------------------------------------ scanning

enum class PValueMode { kMonteCarlo, kGumbel };

struct MonteCarloConfig {
    int replicates = 999;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    PValueMode mode = PValueMode::kMonteCarlo;
};

struct ScanConfig {
    ScanMethod method = ScanMethod::kKulldorff;
    int d_max = 1;
    double alpha = 0.05;
    bool keep_windows = false;
    MonteCarloConfig mc;
};

struct ScanResult {
    double lambda_star = 0.0;  ///< log scale
    std::optional<WindowScore> mlc;
    Zone mlc_zone;
    double q_inside = 0.0;
    double q_outside = 0.0;
    std::optional<double> p_value;         ///< Monte Carlo (with pool)
    std::optional<double> gumbel_p_value;  ///< Gumbel fit to the same replicates
    std::size_t replicates_effective = 0;
    std::vector<double> replicates;
    std::vector<WindowScore> windows;
    bool degenerate = false;
};

struct ScanOutcome {
    ScanResult result;
    AlarmRecord record;
};

namespace detail {

inline CellMatrix normalized(const CellMatrix& b, double target) {
    CellMatrix out = b;
    const double total = b.total();
    require(total > 0.0, "scan: baselines sum to zero");
    for (auto& v : out.values) v *= target / total;
    return out;
}

// One null replicate of the count matrix.
inline CellMatrix draw_replicate(ScanMethod method, const CellMatrix& counts, const CellMatrix& baselines,
                                 const std::vector<double>& cumulative, const std::vector<std::size_t>& case_regions,
                                 const std::vector<std::size_t>& case_steps, Engine& eng) {
    CellMatrix out(counts.regions, counts.steps);
    switch (method) {
        case ScanMethod::kKulldorff: {
            // Multinomial by CDF inversion over the flattened cells.
            const auto y = static_cast<std::int64_t>(std::llround(counts.total()));
            const double top = cumulative.back();
            for (std::int64_t c = 0; c < y; ++c) {
                const double u = uniform01(eng) * top;
                auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
                const auto cell = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), out.values.size() - 1);
                out.values[cell] += 1.0;
            }
            break;
        }
        case ScanMethod::kPermutation: {
            auto steps = case_steps;
            portable_shuffle(steps, eng);
            for (std::size_t c = 0; c < steps.size(); ++c) out(case_regions[c], steps[c]) += 1.0;
            break;
        }
        case ScanMethod::kEbPoisson:
            for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = static_cast<double>(poisson_sample(baselines.values[k], eng));
            break;
    }
    return out;
}

}  // namespace detail

/// Scans all zone x {1..d_max} cylinders ending at the last step of `counts`.
/// For the conditional and permutation methods the baselines are rescaled to
/// sum to the observed total. `analysis` selects the RNG stream family so that
/// successive prospective analyses use independent replicates.
[[nodiscard]] inline ScanOutcome run_scan(const CellMatrix& counts, const CellMatrix& raw_baselines, const ZoneSet& zones,
                                          const ScanConfig& config, ReplicatePool* pool = nullptr,
                                          std::uint64_t analysis = 0, std::int64_t time_index = 0) {
    require(counts.regions == raw_baselines.regions && counts.steps == raw_baselines.steps,
            "scan: counts and baselines differ in shape");
    require(!zones.empty() && zones.max_region() < counts.regions, "scan: zones reference unknown regions");
    require(config.d_max >= 1, "scan: D_max must be at least 1");
    require(config.mc.replicates >= 0, "scan: replicates must be non-negative");
    for (double v : counts.values) require(v >= 0.0, "scan: counts must be non-negative");
    for (double v : raw_baselines.values) require(v >= 0.0 && std::isfinite(v), "scan: baselines must be finite and non-negative");

    ScanOutcome out;
    auto& res = out.result;
    const bool conditional = config.method != ScanMethod::kEbPoisson;
    const double y_total = counts.total();

    if (y_total == 0.0 || raw_baselines.total() == 0.0) {
        res.degenerate = true;
        res.p_value = 1.0;
        out.record = AlarmRecord::make(time_index, 1.0, config.alpha, Comparison::kLessEqual);
        out.record.alarm = false;
        out.record.detail["method"] = to_string(config.method);
        out.record.detail["degenerate"] = true;
        return out;
    }

    const CellMatrix baselines = conditional ? detail::normalized(raw_baselines, y_total) : raw_baselines;
    auto observed = detail::search_windows(counts, baselines, zones, config.d_max, conditional, config.keep_windows);
    res.windows = std::move(observed.all);
    if (observed.best) {
        const auto& w = *observed.best;
        res.lambda_star = w.statistic;
        res.mlc = w;
        res.mlc_zone = zones[w.zone];
        res.q_inside = w.y / w.b;
        const double b_total = baselines.total();
        res.q_outside = b_total > w.b ? (y_total - w.y) / (b_total - w.b) : 0.0;
    }

    if (config.mc.replicates > 0) {
        std::vector<double> cumulative;
        std::vector<std::size_t> case_regions, case_steps;
        if (config.method == ScanMethod::kKulldorff) {
            cumulative.resize(baselines.values.size());
            std::partial_sum(baselines.values.begin(), baselines.values.end(), cumulative.begin());
        } else if (config.method == ScanMethod::kPermutation) {
            for (std::size_t i = 0; i < counts.regions; ++i) {
                for (std::size_t t = 0; t < counts.steps; ++t) {
                    for (auto c = std::llround(counts(i, t)); c > 0; --c) {
                        case_regions.push_back(i);
                        case_steps.push_back(t);
                    }
                }
            }
        }
        res.replicates.assign(static_cast<std::size_t>(config.mc.replicates), 0.0);
        parallel_for(res.replicates.size(), config.mc.workers, [&](std::size_t r) {
            auto eng = make_engine(config.mc.seed, analysis, r);
            const auto rep = detail::draw_replicate(config.method, counts, baselines, cumulative, case_regions, case_steps, eng);
            // Permutation replicates keep both margins, hence the observed baselines.
            const auto& rep_b = baselines;
            auto found = detail::search_windows(rep, rep_b, zones, config.d_max, conditional, false);
            res.replicates[r] = found.best ? found.best->statistic : 0.0;
        });
        ReplicatePool local(0);
        ReplicatePool& p = pool ? *pool : local;
        const auto all = p.combined(res.replicates);
        res.replicates_effective = all.size();
        if (has_spread(all)) res.gumbel_p_value = gumbel_pvalue(all, res.lambda_star);
        res.p_value = pooled_pvalue(p, res.replicates, res.lambda_star);
    }

    const double p_used = config.mc.mode == PValueMode::kGumbel && res.gumbel_p_value ? *res.gumbel_p_value
                                                                                      : res.p_value.value_or(1.0);
    out.record = AlarmRecord::make(time_index, p_used, config.alpha, Comparison::kLessEqual);
    if (!res.mlc) out.record.alarm = false;
    auto& d = out.record.detail;
    d["method"] = to_string(config.method);
    d["lambda_star"] = res.lambda_star;
    if (res.mlc) {
        d["mlc_zone"] = res.mlc_zone;
        d["mlc_duration"] = res.mlc->duration;
        d["observed"] = res.mlc->y;
        d["expected"] = res.mlc->b;
        d["q_inside"] = res.q_inside;
        d["q_outside"] = res.q_outside;
    }
    if (res.p_value) d["p_value"] = *res.p_value;
    if (res.gumbel_p_value) d["gumbel_p_value"] = *res.gumbel_p_value;
    d["replicates"] = res.replicates_effective;
    if (config.keep_windows) {
        auto all = nlohmann::json::array();
        for (const auto& w : res.windows) {
            all.push_back({{"zone", zones[w.zone]}, {"duration", w.duration}, {"statistic", w.statistic}, {"observed", w.y}, {"expected", w.b}});
        }
        d["windows"] = std::move(all);
    }
    return out;
}

[[nodiscard]] inline ScanOutcome scan_poisson_conditional(const CountPanel& panel, const CellMatrix& baselines,
                                                          const ZoneSet& zones, ScanConfig config,
                                                          ReplicatePool* pool = nullptr, std::uint64_t analysis = 0) {
    config.method = ScanMethod::kKulldorff;
    return run_scan(CellMatrix::from_panel(panel), baselines, zones, config, pool, analysis);
}

[[nodiscard]] inline ScanOutcome scan_permutation(const CountPanel& panel, const ZoneSet& zones, ScanConfig config,
                                                  ReplicatePool* pool = nullptr, std::uint64_t analysis = 0) {
    config.method = ScanMethod::kPermutation;
    return run_scan(CellMatrix::from_panel(panel), estimate_baselines_permutation(panel), zones, config, pool, analysis);
}

[[nodiscard]] inline ScanOutcome scan_eb_poisson(const CountPanel& panel, const CellMatrix& baselines,
                                                 const ZoneSet& zones, ScanConfig config,
                                                 ReplicatePool* pool = nullptr, std::uint64_t analysis = 0) {
    config.method = ScanMethod::kEbPoisson;
    return run_scan(CellMatrix::from_panel(panel), baselines, zones, config, pool, analysis);
}

// ------------------------------------------------------------------ LTSS

struct SubsetScore {
    double score = 0.0;
    std::vector<std::size_t> subset;  ///< sorted region indices; empty when no subset scores above 0
};

/// Best subset under the expectation-based Poisson score: sort regions by
/// Y_i / B_i and score each top-j prefix. Regions with B_i = 0 are skipped.
[[nodiscard]] inline SubsetScore ltss_scan(std::span<const double> y, std::span<const double> b) {
    require(y.size() == b.size(), "ltss_scan: length mismatch");
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (b[i] > 0.0) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return y[i] * b[j] > y[j] * b[i]; });
    SubsetScore best;
    double sy = 0.0, sb = 0.0;
    std::size_t best_len = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        sy += y[order[k]];
        sb += b[order[k]];
        const double s = eb_poisson_log_lr(sy, sb);
        if (s > best.score) {
            best.score = s;
            best_len = k + 1;
        }
    }
    best.subset.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best_len));
    std::sort(best.subset.begin(), best.subset.end());
    return best;
}

/// LTSS over region aggregates of the last `duration` steps.
[[nodiscard]] inline SubsetScore ltss_scan(const CellMatrix& counts, const CellMatrix& baselines, int duration) {
    require(duration >= 1 && static_cast<std::size_t>(duration) <= counts.steps, "ltss_scan: invalid duration");
    std::vector<double> y(counts.regions, 0.0), b(counts.regions, 0.0);
    for (std::size_t i = 0; i < counts.regions; ++i) {
        for (std::size_t t = counts.steps - static_cast<std::size_t>(duration); t < counts.steps; ++t) {
            y[i] += counts(i, t);
            b[i] += baselines(i, t);
        }
    }
    return ltss_scan(y, b);
}

namespace detail {

struct LtssBest {
    SubsetScore subset;
    int duration = 1;
};

inline LtssBest best_ltss(const CellMatrix& counts, const CellMatrix& baselines, int d_max) {
    LtssBest best;
    const int d_limit = std::min<int>(d_max, static_cast<int>(counts.steps));
    for (int d = 1; d <= d_limit; ++d) {
        auto s = ltss_scan(counts, baselines, d);
        if (s.score > best.subset.score) best = {std::move(s), d};
    }
    return best;
}

}  // namespace detail

/// LTSS over trailing durations 1..d_max with expectation-based Poisson
/// replicates for the P-value. The flagged subset is reported as the MLC zone.
[[nodiscard]] inline ScanOutcome run_ltss(const CellMatrix& counts, const CellMatrix& baselines, const ScanConfig& config,
                                          ReplicatePool* pool = nullptr, std::uint64_t analysis = 0,
                                          std::int64_t time_index = 0) {
    require(counts.regions == baselines.regions && counts.steps == baselines.steps, "ltss: counts and baselines differ in shape");
    require(config.d_max >= 1, "ltss: D_max must be at least 1");
    ScanOutcome out;
    auto& res = out.result;
    const auto best = detail::best_ltss(counts, baselines, config.d_max);
    res.lambda_star = best.subset.score;
    if (!best.subset.subset.empty()) {
        res.mlc_zone = best.subset.subset;
        double y = 0.0, b = 0.0;
        for (auto i : res.mlc_zone) {
            for (std::size_t t = counts.steps - static_cast<std::size_t>(best.duration); t < counts.steps; ++t) {
                y += counts(i, t);
                b += baselines(i, t);
            }
        }
        res.mlc = WindowScore{0, best.duration, best.subset.score, y, b};
        res.q_inside = y / b;
    }
    if (config.mc.replicates > 0) {
        res.replicates.assign(static_cast<std::size_t>(config.mc.replicates), 0.0);
        parallel_for(res.replicates.size(), config.mc.workers, [&](std::size_t r) {
            auto eng = make_engine(config.mc.seed, analysis, r);
            const auto rep = detail::draw_replicate(ScanMethod::kEbPoisson, counts, baselines, {}, {}, {}, eng);
            res.replicates[r] = detail::best_ltss(rep, baselines, config.d_max).subset.score;
        });
        ReplicatePool local(0);
        ReplicatePool& p = pool ? *pool : local;
        const auto all = p.combined(res.replicates);
        res.replicates_effective = all.size();
        if (has_spread(all)) res.gumbel_p_value = gumbel_pvalue(all, res.lambda_star);
        res.p_value = pooled_pvalue(p, res.replicates, res.lambda_star);
    }
    const double p_used = config.mc.mode == PValueMode::kGumbel && res.gumbel_p_value ? *res.gumbel_p_value
                                                                                      : res.p_value.value_or(1.0);
    out.record = AlarmRecord::make(time_index, p_used, config.alpha, Comparison::kLessEqual);
    if (!res.mlc) out.record.alarm = false;
    auto& d = out.record.detail;
    d["method"] = "ltss";
    d["lambda_star"] = res.lambda_star;
    if (res.mlc) {
        d["mlc_zone"] = res.mlc_zone;
        d["mlc_duration"] = res.mlc->duration;
        d["observed"] = res.mlc->y;
        d["expected"] = res.mlc->b;
    }
    if (res.p_value) d["p_value"] = *res.p_value;
    if (res.gumbel_p_value) d["gumbel_p_value"] = *res.gumbel_p_value;
    d["replicates"] = res.replicates_effective;
    return out;
}

}  // namespace outbreak
