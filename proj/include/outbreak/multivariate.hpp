#pragma once

// Hotelling T^2 monitoring of a p-variate series and a CUSUM on its square root.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "outbreak/common.hpp"
#include "outbreak/data_model.hpp"
#include "outbreak/distributions.hpp"
#include "outbreak/random.hpp"

namespace outbreak {

using MvMatrix = Eigen::MatrixXd;
using MvVector = Eigen::VectorXd;

enum class BaselinePolicy { kFrozen, kExpanding };

/// Sample mean and unbiased covariance, updated one observation at a time.
class MvBaseline {
public:
    MvBaseline() = default;

    /// Rows of `observations` are time points.
    explicit MvBaseline(const MvMatrix& observations, BaselinePolicy policy = BaselinePolicy::kExpanding)
        : policy_(policy) {
        require(observations.rows() >= 1 && observations.cols() >= 1, "MvBaseline: need at least one observation");
        mean_ = MvVector::Zero(observations.cols());
        scatter_ = MvMatrix::Zero(observations.cols(), observations.cols());
        for (Eigen::Index r = 0; r < observations.rows(); ++r) add(observations.row(r).transpose());
    }

    /// Welford update of mean and scatter.
    void add(const MvVector& y) {
        if (n_ == 0 && mean_.size() == 0) {
            mean_ = MvVector::Zero(y.size());
            scatter_ = MvMatrix::Zero(y.size(), y.size());
        }
        require(y.size() == mean_.size(), "MvBaseline: dimension mismatch");
        ++n_;
        const MvVector delta = y - mean_;
        mean_ += delta / static_cast<double>(n_);
        scatter_ += delta * (y - mean_).transpose();
    }

    /// Folds y into the estimates when the policy is expanding.
    void observe(const MvVector& y) {
        if (policy_ == BaselinePolicy::kExpanding) add(y);
    }

    [[nodiscard]] const MvVector& mean() const noexcept { return mean_; }
    [[nodiscard]] MvMatrix covariance() const {
        require(n_ >= 2, "MvBaseline: covariance needs two observations");
        MvMatrix c = scatter_ / static_cast<double>(n_ - 1);
        return 0.5 * (c + c.transpose());
    }
    [[nodiscard]] std::int64_t n_used() const noexcept { return n_; }
    [[nodiscard]] Eigen::Index dimension() const noexcept { return mean_.size(); }
    [[nodiscard]] BaselinePolicy policy() const noexcept { return policy_; }

private:
    MvVector mean_;
    MvMatrix scatter_;
    std::int64_t n_ = 0;
    BaselinePolicy policy_ = BaselinePolicy::kExpanding;
};

/// Scaled-F critical value p(n-1)(n+1)/(n(n-p)) F_{p,n-p;1-alpha} for a new observation.
[[nodiscard]] inline double hotelling_critical_value(std::int64_t p, std::int64_t n, double alpha) {
    require(p >= 1 && n > p, "hotelling: need more baseline observations than variables");
    require(alpha > 0.0 && alpha < 1.0, "hotelling: alpha must lie in (0, 1)");
    const auto pd = static_cast<double>(p), nd = static_cast<double>(n);
    const double scale = pd * (nd - 1.0) * (nd + 1.0) / (nd * (nd - pd));
    return scale * dist::f_quantile(pd, nd - pd, 1.0 - alpha);
}

namespace detail {

inline Eigen::LDLT<MvMatrix> checked_factor(const MvMatrix& cov) {
    Eigen::LDLT<MvMatrix> ldlt(cov);
    const auto d = ldlt.vectorD();
    const double largest = d.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || largest <= 0.0 || d.minCoeff() <= 1e-12 * largest) {
        throw SingularMatrixError(
            "hotelling: baseline covariance is singular; aggregate the series (fewer variables, "
            "longer baseline) or regularize the covariance");
    }
    return ldlt;
}

}  // namespace detail

/// Squared Mahalanobis distance of y from the baseline mean.
[[nodiscard]] inline double hotelling_statistic(const MvVector& y, const MvVector& mean, const MvMatrix& cov) {
    require(y.size() == mean.size() && cov.rows() == y.size() && cov.cols() == y.size(),
            "hotelling: dimension mismatch");
    const auto ldlt = detail::checked_factor(cov);
    const MvVector d = y - mean;
    return d.dot(ldlt.solve(d));
}

struct HotellingResult {
    double t2 = 0.0;
    double threshold = 0.0;
    AlarmRecord record;
};

/// T^2 of y against the baseline with the scaled-F threshold (or a supplied
/// threshold). An expanding baseline then absorbs y.
inline HotellingResult hotelling_t2(const MvVector& y, MvBaseline& baseline, double alpha, std::int64_t t = 0,
                                    std::optional<double> fixed_threshold = std::nullopt) {
    const auto p = baseline.dimension();
    require(baseline.n_used() > p, "hotelling: need more baseline observations than variables");
    HotellingResult r;
    r.t2 = hotelling_statistic(y, baseline.mean(), baseline.covariance());
    r.threshold = fixed_threshold ? *fixed_threshold : hotelling_critical_value(p, baseline.n_used(), alpha);
    r.record = AlarmRecord::make(t, r.t2, r.threshold);
    r.record.detail["method"] = "hotelling";
    r.record.detail["n_used"] = baseline.n_used();
    r.record.detail["p"] = p;
    baseline.observe(y);
    return r;
}

/// Hold-out T^2 values from permuted baseline rows: each replicate shuffles the
/// rows, estimates mean/covariance without the last row and scores that row.
[[nodiscard]] inline std::vector<double> holdout_t2_samples(const MvMatrix& baseline_rows, int replicates,
                                                            std::uint64_t seed) {
    const Eigen::Index n = baseline_rows.rows();
    require(n - 1 > baseline_rows.cols(), "hotelling: hold-out needs n - 1 > p baseline rows");
    require(replicates >= 1, "hotelling: replicates must be positive");
    std::vector<double> out(static_cast<std::size_t>(replicates));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (int r = 0; r < replicates; ++r) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        auto eng = make_engine(seed, 0, static_cast<std::uint64_t>(r));
        portable_shuffle(order, eng);
        MvMatrix fit(n - 1, baseline_rows.cols());
        for (Eigen::Index i = 0; i + 1 < n; ++i) fit.row(i) = baseline_rows.row(order[static_cast<std::size_t>(i)]);
        MvBaseline b(fit, BaselinePolicy::kFrozen);
        out[static_cast<std::size_t>(r)] =
            hotelling_statistic(baseline_rows.row(order.back()).transpose(), b.mean(), b.covariance());
    }
    return out;
}

/// Empirical (1 - alpha) quantile of hold-out T^2 values.
[[nodiscard]] inline double simulated_threshold(const MvMatrix& baseline_rows, double alpha, int replicates,
                                                std::uint64_t seed) {
    require(alpha > 0.0 && alpha < 1.0, "hotelling: alpha must lie in (0, 1)");
    auto s = holdout_t2_samples(baseline_rows, replicates, seed);
    std::sort(s.begin(), s.end());
    const auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(s.size())));
    return s[std::min(s.size(), std::max<std::size_t>(rank, 1)) - 1];
}

enum class ThresholdMode { kScaledF, kSimulated };

struct HotellingConfig {
    double alpha = 1.0 / 36.0;
    BaselinePolicy policy = BaselinePolicy::kExpanding;
    ThresholdMode threshold = ThresholdMode::kScaledF;
    int replicates = 999;  ///< simulated mode
    std::uint64_t seed = 1;
};

/// Monitors rows first..last of `series` (rows = time points), using rows before
/// `first` as the initial baseline. Each step reads only rows <= t.
[[nodiscard]] inline std::vector<HotellingResult> monitor_hotelling(const MvMatrix& series, Eigen::Index first,
                                                                    Eigen::Index last, const HotellingConfig& config) {
    require(first >= 2 && first <= last && last < series.rows(), "hotelling: invalid monitoring range");
    MvBaseline baseline(series.topRows(first), config.policy);
    std::optional<double> fixed;
    if (config.threshold == ThresholdMode::kSimulated) {
        fixed = simulated_threshold(series.topRows(first), config.alpha, config.replicates, config.seed);
    }
    std::vector<HotellingResult> out;
    for (Eigen::Index t = first; t <= last; ++t) {
        out.push_back(hotelling_t2(series.row(t).transpose(), baseline, config.alpha, t, fixed));
    }
    return out;
}

/// Panel (regions x steps) as a time x regions matrix.
[[nodiscard]] inline MvMatrix to_matrix(const CountPanel& panel) {
    MvMatrix m(static_cast<Eigen::Index>(panel.steps()), static_cast<Eigen::Index>(panel.regions()));
    for (std::size_t i = 0; i < panel.regions(); ++i) {
        for (std::size_t t = 0; t < panel.steps(); ++t) {
            m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = static_cast<double>(panel(i, t));
        }
    }
    return m;
}

// ------------------------------------------------------------------ CUSUM

struct CusumState {
    double s = 0.0;
    double k = 0.5;
    double c = 5.0;
};

/// S_t = max(0, S_{t-1} + T_t - k); alarm when S_t > c.
inline AlarmRecord crosier_cusum(double value, CusumState& state, std::int64_t t = 0) {
    require(state.k > 0.0, "cusum: reference value k must be positive");
    state.s = std::max(0.0, state.s + value - state.k);
    auto rec = AlarmRecord::make(t, state.s, state.c);
    rec.detail["method"] = "cusum";
    rec.detail["input"] = value;
    return rec;
}

[[nodiscard]] inline std::vector<AlarmRecord> crosier_cusum(std::span<const double> values, CusumState state) {
    std::vector<AlarmRecord> out;
    out.reserve(values.size());
    for (std::size_t t = 0; t < values.size(); ++t) out.push_back(crosier_cusum(values[t], state, static_cast<std::int64_t>(t)));
    return out;
}

/// Mean run length of the CUSUM on bootstrap sequences drawn from `in_control`.
/// Runs are truncated at `horizon`; truncated runs count as `horizon`.
[[nodiscard]] inline double cusum_run_length(std::span<const double> in_control, double k, double c, int sequences,
                                             int horizon, std::uint64_t seed) {
    require(!in_control.empty(), "cusum: need in-control samples");
    double total = 0.0;
    for (int r = 0; r < sequences; ++r) {
        auto eng = make_engine(seed, 1, static_cast<std::uint64_t>(r));
        double s = 0.0;
        int t = 1;
        for (; t <= horizon; ++t) {
            const auto pick = static_cast<std::size_t>(uniform01(eng) * static_cast<double>(in_control.size()));
            s = std::max(0.0, s + in_control[std::min(pick, in_control.size() - 1)] - k);
            if (s > c) break;
        }
        total += std::min(t, horizon);
    }
    return total / sequences;
}

/// k = mean of the in-control square-root statistics; c found by bisection so
/// that the simulated in-control ARL matches `target_arl`.
[[nodiscard]] inline CusumState calibrate_cusum(std::span<const double> in_control, double target_arl,
                                                int sequences = 2000, std::uint64_t seed = 1) {
    require(target_arl > 1.0, "cusum: target ARL must exceed 1");
    CusumState st;
    st.k = std::accumulate(in_control.begin(), in_control.end(), 0.0) / static_cast<double>(in_control.size());
    require(st.k > 0.0, "cusum: in-control mean must be positive");
    const int horizon = static_cast<int>(std::ceil(50.0 * target_arl));
    double lo = 0.0, hi = st.k;
    while (cusum_run_length(in_control, st.k, hi, sequences, horizon, seed) < target_arl && hi < 1e6) hi *= 2.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (cusum_run_length(in_control, st.k, mid, sequences, horizon, seed) < target_arl ? lo : hi) = mid;
    }
    st.c = hi;
    return st;
}

}  // namespace outbreak
