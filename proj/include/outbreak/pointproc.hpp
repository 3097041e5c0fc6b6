#pragma once

// Shiryaev-Roberts detector for space-time point events: a sum over past
// events k of likelihood ratios for a cluster in the cylinder
// B(s_k, rho) x (t_k, t_n], with the expected count estimated from the data.

#include <cmath>
#include <optional>
#include <vector>

#include "outbreak/common.hpp"
#include "outbreak/data_model.hpp"

namespace outbreak {

/// Which event the cylinder indicator tests.
enum class SrIndicator {
    kCenter,  ///< event k against its own ball: always 1
    kNewest,  ///< newest event n against the ball around event k
};

struct SrConfig {
    double rho = 1.0;      ///< km, boundary inclusive
    double epsilon = 0.2;  ///< relative intensity change inside a cluster
    double arl = 30.0;     ///< alarm threshold on R_n
    SrIndicator indicator = SrIndicator::kCenter;

    void validate() const {
        require(rho > 0.0 && epsilon > 0.0 && arl > 0.0, "SrConfig: rho, epsilon and ARL must be positive");
    }
};

struct SrCluster {
    std::size_t center = 0;  ///< index of event k in the stream
    double x = 0.0, y = 0.0, radius = 0.0;
    double start = 0.0, end = 0.0;
    double log_lambda = 0.0;
    std::vector<std::size_t> members;  ///< events inside the cylinder
};

/// Incremental state: per past event k, the counts entering Lambda_{k,n}.
class SrState {
public:
    explicit SrState(SrConfig config) : config_(config) { config_.validate(); }

    [[nodiscard]] const SrConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::size_t size() const noexcept { return events_.size(); }
    [[nodiscard]] double statistic() const noexcept { return r_; }
    [[nodiscard]] const std::vector<Event>& events() const noexcept { return events_; }

    /// log Lambda_{k,n} for the current n (minus infinity when the indicator is 0).
    [[nodiscard]] double log_lambda(std::size_t k) const {
        const double n = static_cast<double>(events_.size());
        const double mu = static_cast<double>(disk_[k]) * static_cast<double>(after_[k]) / n;
        if (config_.indicator == SrIndicator::kNewest && !in_ball(k, events_.size() - 1)) return -kInf;
        return static_cast<double>(cylinder_[k]) * std::log1p(config_.epsilon) - config_.epsilon * mu;
    }

    /// Adds the next event (time must not decrease) and returns the updated decision.
    AlarmRecord update(const Event& e) {
        require(std::isfinite(e.x) && std::isfinite(e.y) && std::isfinite(e.t), "sr_update: non-finite event");
        if (!events_.empty() && e.t < events_.back().t) throw std::invalid_argument("sr_update: events must arrive in time order");
        events_.push_back(e);
        const std::size_t n = events_.size() - 1;
        std::size_t own_disk = 1;
        for (std::size_t k = 0; k < n; ++k) {
            const bool near = in_ball(k, n);
            const bool later = e.t > events_[k].t;
            own_disk += near;
            disk_[k] += near;
            cylinder_[k] += near && later;
            after_[k] += later;
        }
        disk_.push_back(own_disk);
        cylinder_.push_back(0);
        after_.push_back(0);

        r_ = 0.0;
        best_ = 0;
        double best_log = -kInf;
        for (std::size_t k = 0; k <= n; ++k) {
            const double l = log_lambda(k);
            r_ += std::exp(l);
            if (l > best_log) {
                best_log = l;
                best_ = k;
            }
        }
        auto rec = AlarmRecord::make(static_cast<std::int64_t>(n), r_, config_.arl);
        rec.detail["time"] = e.t;
        if (rec.alarm) {
            const auto c = cluster();
            rec.detail["cluster"] = {{"center_event", c.center}, {"x", c.x},         {"y", c.y},
                                     {"radius", c.radius},       {"start", c.start}, {"end", c.end},
                                     {"members", c.members}};
        }
        return rec;
    }

    /// The cylinder with the largest Lambda_{k,n}.
    [[nodiscard]] SrCluster cluster() const {
        require(!events_.empty(), "SrState: no events");
        SrCluster c;
        c.center = best_;
        c.x = events_[best_].x;
        c.y = events_[best_].y;
        c.radius = config_.rho;
        c.start = events_[best_].t;
        c.end = events_.back().t;
        c.log_lambda = log_lambda(best_);
        for (std::size_t j = best_ + 1; j < events_.size(); ++j) {
            if (events_[j].t > c.start && in_ball(best_, j)) c.members.push_back(j);
        }
        return c;
    }

private:
    [[nodiscard]] bool in_ball(std::size_t a, std::size_t b) const {
        return std::hypot(events_[a].x - events_[b].x, events_[a].y - events_[b].y) <= config_.rho;
    }

    SrConfig config_;
    std::vector<Event> events_;
    std::vector<std::size_t> disk_;      // N(B(s_k, rho) x (0, t_n])
    std::vector<std::size_t> cylinder_;  // N(B(s_k, rho) x (t_k, t_n])
    std::vector<std::size_t> after_;     // N(A x (t_k, t_n])
    double r_ = 0.0;
    std::size_t best_ = 0;
};

[[nodiscard]] inline AlarmRecord sr_update(SrState& state, const Event& e) { return state.update(e); }

/// R_n recomputed from scratch for the first n events.
[[nodiscard]] inline double sr_statistic_batch(std::span<const Event> events, const SrConfig& config) {
    const std::size_t n = events.size();
    if (n == 0) return 0.0;
    const auto& last = events[n - 1];
    auto dist = [&](const Event& a, const Event& b) { return std::hypot(a.x - b.x, a.y - b.y); };
    double r = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (config.indicator == SrIndicator::kNewest && dist(events[k], last) > config.rho) continue;
        double cyl = 0.0, disk = 0.0, after = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const bool near = dist(events[k], events[j]) <= config.rho;
            const bool later = events[j].t > events[k].t && events[j].t <= last.t;
            disk += near;
            after += later;
            cyl += near && later;
        }
        r += std::pow(1.0 + config.epsilon, cyl) * std::exp(-config.epsilon * disk * after / static_cast<double>(n));
    }
    return r;
}

struct SrRunResult {
    std::vector<AlarmRecord> records;
    std::optional<SrCluster> first_cluster;
    std::optional<std::size_t> first_alarm;  ///< event index
};

/// Folds sr_update over the stream; stops at the first alarm unless `keep_going`.
[[nodiscard]] inline SrRunResult sr_run(const EventStream& stream, const SrConfig& config, bool keep_going = false) {
    SrState state(config);
    SrRunResult out;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        out.records.push_back(state.update(stream[i]));
        if (out.records.back().alarm && !out.first_alarm) {
            out.first_alarm = i;
            out.first_cluster = state.cluster();
            if (!keep_going) break;
        }
    }
    return out;
}

}  // namespace outbreak
