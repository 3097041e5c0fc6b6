#pragma once

// Bayesian space-time scan statistic with gamma-Poisson (negative binomial)
// marginal likelihoods, posterior window probabilities, and a discrete prior
// on the in-window gamma shape that is updated from one analysis to the next.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "outbreak/common.hpp"
#include "outbreak/data_model.hpp"
#include "outbreak/random.hpp"
#include "outbreak/scan.hpp"
#include "outbreak/zones.hpp"

namespace outbreak {

struct GammaPrior {
    double shape = 1.0;
    double rate = 1.0;
};

/// log of Gamma(a+Y)/(Y! Gamma(a)) (b/(b+B))^a (B/(b+B))^Y. B = 0 gives a
/// point mass at Y = 0.
[[nodiscard]] inline double negbin_log_marginal(double y, double b, const GammaPrior& prior) {
    require(prior.shape > 0.0 && prior.rate > 0.0, "negbin_log_marginal: gamma parameters must be positive");
    require(y >= 0.0 && b >= 0.0, "negbin_log_marginal: counts and baselines must be non-negative");
    if (b == 0.0) return y == 0.0 ? 0.0 : -kInf;
    const double a = prior.shape, r = prior.rate;
    double out = a * (std::log(r) - std::log(r + b));
    if (y > 0.0) out += std::lgamma(a + y) - std::lgamma(y + 1.0) - std::lgamma(a) + y * (std::log(b) - std::log(r + b));
    return out;
}

[[nodiscard]] inline double log_sum_exp(std::span<const double> v) {
    double m = -kInf;
    for (double x : v) m = std::max(m, x);
    if (m == -kInf) return -kInf;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

/// Discrete prior (or posterior) over the in-window gamma shape.
struct AlphaGrid {
    std::vector<double> values;
    std::vector<double> weights;

    /// `points` equally spaced values on [lo, hi] with equal weight.
    [[nodiscard]] static AlphaGrid uniform(double lo = 1.0, double hi = 15.0, std::size_t points = 10) {
        require(points >= 1 && lo > 0.0 && hi >= lo, "AlphaGrid: invalid range");
        AlphaGrid g;
        for (std::size_t k = 0; k < points; ++k) {
            g.values.push_back(points == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1));
        }
        g.weights.assign(points, 1.0 / static_cast<double>(points));
        return g;
    }

    void validate() const {
        require(!values.empty() && values.size() == weights.size(), "AlphaGrid: values and weights differ in length");
        double s = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) {
            require(values[k] > 0.0 && weights[k] >= 0.0, "AlphaGrid: invalid support point or weight");
            s += weights[k];
        }
        require(std::abs(s - 1.0) < 1e-9, "AlphaGrid: weights must sum to 1");
    }
};

struct OutbreakPriors {
    double p_h1 = 1e-7;
    /// Distribution over the scanned windows (in scan order); empty = uniform.
    std::vector<double> window_prior;
    GammaPrior all{1.0, 1.0};
    GammaPrior outside{1.0, 1.0};
    double beta_w = 1.0;
    AlphaGrid alpha_w_grid = AlphaGrid::uniform();

    void validate() const {
        require(p_h1 >= 0.0 && p_h1 <= 1.0, "OutbreakPriors: p_h1 must lie in [0, 1]");
        require(beta_w > 0.0, "OutbreakPriors: beta_W must be positive");
        if (!window_prior.empty()) {
            const double s = std::accumulate(window_prior.begin(), window_prior.end(), 0.0);
            require(std::abs(s - 1.0) < 1e-9, "OutbreakPriors: window prior must sum to 1");
        }
        alpha_w_grid.validate();
    }
};

/// Uniform window prior: P(H1(W)) = p_h1 / |windows|.
[[nodiscard]] inline OutbreakPriors elicit_window_prior(std::size_t window_count, double p_h1) {
    require(window_count >= 1, "elicit_window_prior: no windows");
    OutbreakPriors p;
    p.p_h1 = p_h1;
    p.window_prior.assign(window_count, 1.0 / static_cast<double>(window_count));
    return p;
}

struct WindowPosterior {
    std::size_t zone = 0;
    int duration = 1;
    double y = 0.0;
    double b = 0.0;
    double posterior = 0.0;
};

struct PosteriorResult {
    std::vector<WindowPosterior> windows;  ///< scan order, B_W = 0 windows excluded
    double null_posterior = 1.0;
    double outbreak_posterior = 0.0;  ///< sum over windows
    std::optional<WindowPosterior> map_window;
    Zone map_zone;
    AlphaGrid updated_grid;
};

struct BayesScanConfig {
    int d_max = 1;
    double threshold = 0.5;
    std::size_t top = 10;
    unsigned workers = 1;
};

struct BayesOutcome {
    PosteriorResult posterior;
    AlarmRecord record;
};

/// Posterior probabilities for every zone x {1..d_max} cylinder ending at the
/// last step. If `priors.window_prior` is given it must have one entry per
/// window with positive baseline, ordered zone-major then by duration.
[[nodiscard]] inline BayesOutcome bayes_scan(const CellMatrix& counts, const CellMatrix& baselines, const ZoneSet& zones,
                                             const OutbreakPriors& priors, const BayesScanConfig& config,
                                             std::int64_t time_index = 0) {
    require(counts.regions == baselines.regions && counts.steps == baselines.steps, "bayes_scan: shape mismatch");
    require(!zones.empty() && zones.max_region() < counts.regions, "bayes_scan: zones reference unknown regions");
    require(config.d_max >= 1, "bayes_scan: D_max must be at least 1");
    priors.validate();
    for (double v : counts.values) require(v >= 0.0, "bayes_scan: counts must be non-negative");
    for (double v : baselines.values) require(v >= 0.0 && std::isfinite(v), "bayes_scan: baselines must be finite and non-negative");

    const double y_total = counts.total(), b_total = baselines.total();
    require(b_total > 0.0, "bayes_scan: baselines sum to zero");

    // Window aggregates, zone-major.
    const int d_limit = std::min<int>(config.d_max, static_cast<int>(counts.steps));
    std::vector<std::vector<double>> zy(static_cast<std::size_t>(d_limit)), zb(static_cast<std::size_t>(d_limit));
    {
        std::vector<double> ry(counts.regions, 0.0), rb(counts.regions, 0.0);
        for (int d = 1; d <= d_limit; ++d) {
            const std::size_t t = counts.steps - static_cast<std::size_t>(d);
            for (std::size_t i = 0; i < counts.regions; ++i) {
                ry[i] += counts(i, t);
                rb[i] += baselines(i, t);
            }
            zy[static_cast<std::size_t>(d - 1)] = zones.zone_sums(ry);
            zb[static_cast<std::size_t>(d - 1)] = zones.zone_sums(rb);
        }
    }
    PosteriorResult res;
    for (std::size_t z = 0; z < zones.size(); ++z) {
        for (int d = 1; d <= d_limit; ++d) {
            const auto k = static_cast<std::size_t>(d - 1);
            if (zb[k][z] > 0.0) res.windows.push_back({z, d, zy[k][z], zb[k][z], 0.0});
        }
    }
    require(!res.windows.empty(), "bayes_scan: no window has a positive baseline");
    require(priors.window_prior.empty() || priors.window_prior.size() == res.windows.size(),
            "bayes_scan: window prior length does not match the scanned windows");

    const auto& grid = priors.alpha_w_grid;
    const std::size_t nk = grid.values.size(), nw = res.windows.size();
    const double log_p1 = std::log(priors.p_h1), log_p0 = std::log1p(-priors.p_h1);
    const double log_null = log_p0 + negbin_log_marginal(y_total, b_total, priors.all);

    // joint[w * nk + k] = log P(H1(W)) + log w_k + log P(y | H1(W), alpha_k)
    std::vector<double> joint(nw * nk);
    parallel_for(nw, config.workers, [&](std::size_t w) {
        const auto& win = res.windows[w];
        const double prior_w = priors.window_prior.empty() ? 1.0 / static_cast<double>(nw) : priors.window_prior[w];
        const double out = negbin_log_marginal(std::max(0.0, y_total - win.y), std::max(0.0, b_total - win.b), priors.outside);
        for (std::size_t k = 0; k < nk; ++k) {
            joint[w * nk + k] = log_p1 + std::log(prior_w) + std::log(grid.weights[k]) + out +
                                negbin_log_marginal(win.y, win.b, GammaPrior{grid.values[k], priors.beta_w});
        }
    });

    std::vector<double> terms(joint);
    terms.push_back(log_null);
    const double log_evidence = log_sum_exp(terms);
    res.null_posterior = std::exp(log_null - log_evidence);
    std::vector<double> row(nk);
    for (std::size_t w = 0; w < nw; ++w) {
        std::copy_n(joint.begin() + static_cast<std::ptrdiff_t>(w * nk), nk, row.begin());
        res.windows[w].posterior = std::exp(log_sum_exp(row) - log_evidence);
    }
    res.outbreak_posterior = 0.0;
    for (const auto& w : res.windows) res.outbreak_posterior += w.posterior;

    // alpha_k posterior: w_k * [P(H0) P(y|H0) + sum_W P(H1(W)) P(y|H1(W), alpha_k)] / P(y).
    res.updated_grid = grid;
    {
        std::vector<double> col(nw + 1), logs(nk);
        for (std::size_t k = 0; k < nk; ++k) {
            for (std::size_t w = 0; w < nw; ++w) col[w] = joint[w * nk + k];
            col[nw] = grid.weights[k] > 0.0 ? log_null + std::log(grid.weights[k]) : -kInf;
            logs[k] = log_sum_exp(col);
        }
        const double norm = log_sum_exp(logs);
        for (std::size_t k = 0; k < nk; ++k) res.updated_grid.weights[k] = std::exp(logs[k] - norm);
    }

    // MAP window with the scan tie-break (smaller zone, shorter duration, lower index).
    for (const auto& w : res.windows) {
        if (!res.map_window || w.posterior > res.map_window->posterior ||
            (w.posterior == res.map_window->posterior &&
             detail::better_window({w.zone, w.duration, 1.0}, {res.map_window->zone, res.map_window->duration, 1.0}, zones))) {
            res.map_window = w;
        }
    }
    res.map_zone = zones[res.map_window->zone];

    BayesOutcome out{res, AlarmRecord::make(time_index, res.map_window->posterior, config.threshold)};
    auto& d = out.record.detail;
    d["method"] = "bayes";
    d["null_posterior"] = res.null_posterior;
    d["outbreak_posterior"] = res.outbreak_posterior;
    d["map_zone"] = res.map_zone;
    d["map_duration"] = res.map_window->duration;
    std::vector<std::size_t> order(nw);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t top = std::min(config.top, nw);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(), [&](std::size_t a, std::size_t b) {
        return res.windows[a].posterior != res.windows[b].posterior ? res.windows[a].posterior > res.windows[b].posterior : a < b;
    });
    auto table = nlohmann::json::array();
    for (std::size_t r = 0; r < top; ++r) {
        const auto& w = res.windows[order[r]];
        table.push_back({{"zone", zones[w.zone]}, {"duration", w.duration}, {"observed", w.y}, {"expected", w.b}, {"posterior", w.posterior}});
    }
    d["top"] = std::move(table);
    d["alpha_w"] = {{"values", res.updated_grid.values}, {"weights", res.updated_grid.weights}};
    return out;
}

/// Runs the Bayesian scan and carries the alpha_W posterior into the next analysis.
class BayesScanSequence {
public:
    explicit BayesScanSequence(OutbreakPriors priors, BayesScanConfig config) : priors_(std::move(priors)), config_(config) {}

    BayesOutcome analyse(const CellMatrix& counts, const CellMatrix& baselines, const ZoneSet& zones, std::int64_t t = 0) {
        auto out = bayes_scan(counts, baselines, zones, priors_, config_, t);
        priors_.alpha_w_grid = out.posterior.updated_grid;
        return out;
    }

    [[nodiscard]] const OutbreakPriors& priors() const noexcept { return priors_; }

private:
    OutbreakPriors priors_;
    BayesScanConfig config_;
};

}  // namespace outbreak
