#pragma once

// Single-series detectors: the EARS Gaussian rule, the Farrington quasi-Poisson
// procedure, and the helpers they share (seasonal history selection, a harmonic
// regression baseline).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "outbreak/common.hpp"
#include "outbreak/data_model.hpp"
#include "outbreak/distributions.hpp"
#include "outbreak/glm.hpp"

namespace outbreak {

// ------------------------------------------------------------------ EARS

enum class EarsMode { kMultiplier, kTQuantile };

struct EarsConfig {
    int k = 7;
    EarsMode mode = EarsMode::kMultiplier;
    double multiplier = 3.0;
    double alpha = 0.00134989803163;  ///< t-quantile mode only; default 1 - Phi(3)

    void validate() const {
        require(k >= 2, "EARS: baseline length k must be at least 2");
        require(multiplier > 0.0, "EARS: multiplier must be positive");
        require(alpha > 0.0 && alpha < 0.5, "EARS: alpha must lie in (0, 0.5)");
    }
};

/// EARS on real-valued data: baseline is values[t-k .. t-1]. Used directly for
/// rates or rescaled counts and by the count overload below.
[[nodiscard]] inline AlarmRecord ears(std::span<const double> values, std::size_t t, const EarsConfig& config) {
    config.validate();
    const auto k = static_cast<std::size_t>(config.k);
    require(t < values.size(), "EARS: time index out of range");
    require(t >= k, "EARS: fewer than k values precede t");

    double mean = 0.0;
    for (std::size_t s = t - k; s < t; ++s) mean += values[s];
    mean /= static_cast<double>(k);
    double ss = 0.0;
    for (std::size_t s = t - k; s < t; ++s) ss += (values[s] - mean) * (values[s] - mean);
    const double sd = std::sqrt(ss / static_cast<double>(k - 1));

    double factor = config.multiplier;
    if (config.mode == EarsMode::kTQuantile) {
        factor = dist::student_t_quantile(static_cast<double>(k - 1), 1.0 - config.alpha) *
                 std::sqrt(1.0 + 1.0 / static_cast<double>(k));
    }
    // A constant baseline gives s = 0 and collapses the limit onto the mean.
    const bool degenerate = sd <= 1e-12 * std::max(1.0, std::fabs(mean));
    const double upper = degenerate ? mean : mean + factor * sd;

    auto rec = AlarmRecord::make(static_cast<std::int64_t>(t), values[t], upper);
    rec.detail["method"] = "ears";
    rec.detail["mean"] = mean;
    rec.detail["sd"] = degenerate ? 0.0 : sd;
    rec.detail["factor"] = factor;
    rec.detail["z"] = degenerate ? 0.0 : (values[t] - mean) / sd;
    if (degenerate) rec.detail["degenerate"] = true;
    return rec;
}

[[nodiscard]] inline AlarmRecord ears(const CountSeries& series, std::size_t t, const EarsConfig& config) {
    std::vector<double> v(series.values().begin(), series.values().end());
    return ears(std::span<const double>(v), t, config);
}

// ------------------------------------------------------------------ seasonal history

/// Indices {t - i*P + j : |j| <= half_window} for i = 1, 2, ... while the window
/// centre is in range (at most max_years seasons). Windows are clipped to [0, t);
/// a season that loses more than half of its window is dropped.
[[nodiscard]] inline std::vector<std::size_t> stroup_history(std::size_t t, int period, int half_window,
                                                             int max_years = std::numeric_limits<int>::max()) {
    require(period >= 1, "stroup_history: period must be positive");
    require(half_window >= 0, "stroup_history: half window must be non-negative");
    require(2 * half_window + 1 <= period, "stroup_history: window wider than one season");
    std::vector<std::size_t> out;
    const auto T = static_cast<std::int64_t>(t);
    for (std::int64_t i = 1; i <= max_years; ++i) {
        const std::int64_t centre = T - i * period;
        if (centre < 0) break;
        std::vector<std::size_t> year;
        for (std::int64_t j = -half_window; j <= half_window; ++j) {
            const std::int64_t s = centre + j;
            if (s >= 0 && s < T) year.push_back(static_cast<std::size_t>(s));
        }
        const auto lost = static_cast<std::int64_t>(2 * half_window + 1) - static_cast<std::int64_t>(year.size());
        if (lost > half_window) continue;
        out.insert(out.end(), year.begin(), year.end());
    }
    if (out.empty()) throw std::invalid_argument("stroup_history: no previous season available before t");
    std::sort(out.begin(), out.end());
    return out;
}

[[nodiscard]] inline std::vector<std::size_t> stroup_history(const CountSeries& series, std::size_t t, int half_window,
                                                             int max_years = std::numeric_limits<int>::max()) {
    require(t < series.size(), "stroup_history: time index out of range");
    return stroup_history(t, series.period(), half_window, max_years);
}

// ------------------------------------------------------------------ Farrington

struct FarringtonConfig {
    int b = 3;
    int w = 3;
    double alpha = 0.00135;
    glm::Scale scale = glm::Scale::kIdentity;
    bool include_trend = true;
    bool trend_rules_enabled = true;  ///< false keeps the trend unconditionally
    bool reweight_enabled = false;
    double trend_level = 0.05;
    int min_trend_years = 3;

    void validate() const {
        require(b >= 1, "Farrington: b must be at least 1");
        require(w >= 0, "Farrington: w must be non-negative");
        require(b * (2 * w + 1) >= 3, "Farrington: historic set needs at least 3 points");
        require(alpha > 0.0 && alpha <= 0.5, "Farrington: alpha must lie in (0, 0.5]");
    }
};

/// Anscombe residuals of a Poisson fit scaled by sqrt(phi).
[[nodiscard]] inline glm::Vector anscombe_residuals(const glm::Vector& y, const glm::Vector& mu, double phi) {
    glm::Vector r(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        r[i] = 1.5 * (std::cbrt(y[i] * y[i]) - std::cbrt(mu[i] * mu[i])) / (std::pow(mu[i], 1.0 / 6.0) * std::sqrt(phi));
    }
    return r;
}

/// Down-weights points whose residual exceeds 1 by r^-2, then rescales to sum n.
[[nodiscard]] inline glm::Vector anscombe_weights(const glm::Vector& residuals) {
    glm::Vector w(residuals.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = residuals[i] <= 1.0 ? 1.0 : 1.0 / (residuals[i] * residuals[i]);
    return w * (static_cast<double>(w.size()) / w.sum());
}

namespace detail {

struct FarringtonModel {
    glm::GlmFit fit;
    bool trend = false;
    bool reweighted = false;
};

inline FarringtonModel fit_farrington_model(const glm::Vector& offsets, const glm::Vector& y, bool trend,
                                            bool reweight) {
    glm::Matrix x(y.size(), trend ? 2 : 1);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        x(i, 0) = 1.0;
        if (trend) x(i, 1) = offsets[i];
    }
    FarringtonModel m;
    m.trend = trend;
    m.fit = glm::fit_quasipoisson(x, y);
    if (reweight && m.fit.converged && !m.fit.degenerate) {
        const auto r = anscombe_residuals(y, m.fit.fitted, m.fit.dispersion);
        const auto w = anscombe_weights(r);
        if ((w.array() != 1.0).any()) {
            m.fit = glm::fit_quasipoisson(x, y, w);
            m.reweighted = true;
        }
    }
    return m;
}

}  // namespace detail

/// Farrington detector at step t. The regression uses time offsets s - t so the
/// prediction row is (1, 0) and the intercept carries log mu_t.
[[nodiscard]] inline AlarmRecord farrington(const CountSeries& series, std::size_t t, const FarringtonConfig& config) {
    config.validate();
    require(t < series.size(), "Farrington: time index out of range");
    const int period = series.period();
    require(t >= static_cast<std::size_t>(config.b) * static_cast<std::size_t>(period),
            "Farrington: fewer than b full seasons precede t");

    const auto idx = stroup_history(series, t, config.w, config.b);
    glm::Vector y(static_cast<Eigen::Index>(idx.size()));
    glm::Vector offsets(y.size());
    double hist_max = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        y[static_cast<Eigen::Index>(i)] = static_cast<double>(series[idx[i]]);
        offsets[static_cast<Eigen::Index>(i)] = static_cast<double>(idx[i]) - static_cast<double>(t);
        hist_max = std::max(hist_max, y[static_cast<Eigen::Index>(i)]);
    }
    const auto observed = static_cast<double>(series[t]);
    const auto years = static_cast<int>((t - idx.front() + static_cast<std::size_t>(config.w)) / static_cast<std::size_t>(period));

    if (y.sum() == 0.0) {
        auto rec = AlarmRecord::make(static_cast<std::int64_t>(t), observed, 0.0);
        rec.detail["method"] = "farrington";
        rec.detail["degenerate"] = true;
        rec.detail["history_size"] = idx.size();
        return rec;
    }

    const bool can_trend = y.size() >= 3;
    auto model = detail::fit_farrington_model(offsets, y, config.include_trend && can_trend, config.reweight_enabled);
    double trend_p = std::numeric_limits<double>::quiet_NaN();
    if (model.trend && model.fit.converged) {
        const double se = std::sqrt(model.fit.covariance(1, 1));
        trend_p = se > 0.0 ? 2.0 * dist::normal_sf(std::fabs(model.fit.coefficients[1]) / se) : 0.0;
    }
    if (model.trend && config.trend_rules_enabled) {
        const bool keep = model.fit.converged && trend_p < config.trend_level && years >= config.min_trend_years &&
                          std::exp(model.fit.coefficients[0]) <= hist_max;
        if (!keep) model = detail::fit_farrington_model(offsets, y, false, config.reweight_enabled);
    }

    if (!model.fit.converged) {
        // No usable limit; report without alarming rather than guessing.
        auto rec = AlarmRecord::make(static_cast<std::int64_t>(t), observed, std::numeric_limits<double>::infinity());
        rec.detail["method"] = "farrington";
        rec.detail["converged"] = false;
        return rec;
    }

    glm::Vector x = glm::Vector::Zero(model.fit.parameters());
    x[0] = 1.0;
    const auto pi = glm::predict_upper(model.fit, x, config.alpha, config.scale);
    auto rec = AlarmRecord::make(static_cast<std::int64_t>(t), observed, pi.upper);
    rec.detail["method"] = "farrington";
    rec.detail["mean"] = pi.mean;
    rec.detail["dispersion"] = model.fit.dispersion;
    rec.detail["trend"] = model.trend;
    if (!std::isnan(trend_p)) rec.detail["trend_p"] = trend_p;
    rec.detail["reweighted"] = model.reweighted;
    rec.detail["scale"] = glm::to_string(config.scale);
    rec.detail["history_size"] = idx.size();
    return rec;
}

// ------------------------------------------------------------------ harmonic baseline

struct HarmonicModelConfig {
    int harmonics = 1;
    bool include_trend = true;
    int period = 0;  ///< 0 takes the series' season length
};

class HarmonicModel {
public:
    HarmonicModel(glm::GlmFit fit, int harmonics, bool trend, int period)
        : fit_(std::move(fit)), harmonics_(harmonics), trend_(trend), period_(period) {}

    [[nodiscard]] static glm::Vector row(double t, int harmonics, bool trend, int period) {
        glm::Vector r(1 + (trend ? 1 : 0) + 2 * harmonics);
        Eigen::Index c = 0;
        r[c++] = 1.0;
        if (trend) r[c++] = t;
        for (int l = 1; l <= harmonics; ++l) {
            const double angle = 2.0 * kPi * l * t / period;
            r[c++] = std::sin(angle);
            r[c++] = std::cos(angle);
        }
        return r;
    }

    /// Fitted mean at any (possibly future) step.
    [[nodiscard]] double mean(double t) const {
        return std::exp(row(t, harmonics_, trend_, period_).dot(fit_.coefficients));
    }

    /// Amplitude sqrt(b_sin^2 + b_cos^2) of harmonic l on the log scale.
    [[nodiscard]] double amplitude(int l) const {
        require(l >= 1 && l <= harmonics_, "HarmonicModel: harmonic out of range");
        const Eigen::Index c = 1 + (trend_ ? 1 : 0) + 2 * (l - 1);
        return std::hypot(fit_.coefficients[c], fit_.coefficients[c + 1]);
    }

    [[nodiscard]] const glm::GlmFit& fit() const noexcept { return fit_; }
    [[nodiscard]] int period() const noexcept { return period_; }

private:
    glm::GlmFit fit_;
    int harmonics_;
    bool trend_;
    int period_;
};

/// Log-linear seasonal regression with L sine/cosine pairs over all of `values`.
[[nodiscard]] inline HarmonicModel harmonic_mean_model(std::span<const std::int64_t> values, int season_length,
                                                       const HarmonicModelConfig& config) {
    require(config.harmonics >= 0, "harmonic model: L must be non-negative");
    const int period = config.period > 0 ? config.period : season_length;
    require(period >= 2 || config.harmonics == 0, "harmonic model: period must be at least 2");
    const auto n = static_cast<Eigen::Index>(values.size());
    const int p = 1 + (config.include_trend ? 1 : 0) + 2 * config.harmonics;
    require(p < n, "harmonic model: more coefficients than observations allow");
    glm::Matrix x(n, p);
    glm::Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x.row(i) = HarmonicModel::row(static_cast<double>(i), config.harmonics, config.include_trend, period);
        y[i] = static_cast<double>(values[static_cast<std::size_t>(i)]);
    }
    return HarmonicModel(glm::fit_quasipoisson(x, y), config.harmonics, config.include_trend, period);
}

[[nodiscard]] inline HarmonicModel harmonic_mean_model(const CountSeries& series, const HarmonicModelConfig& config) {
    return harmonic_mean_model(series.values(), series.period(), config);
}

}  // namespace outbreak
