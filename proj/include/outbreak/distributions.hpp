#pragma once

// Distribution functions used by the detectors: normal, Student t, F, Poisson,
// negative binomial and the Gumbel approximation for scan-statistic maxima.
//
// Continuous quantiles start from a closed-form approximation (Wichura for the
// normal, a Cornish-Fisher expansion for t, Paulson's Wilson-Hilferty cube-root
// form for F) and are polished with bracketed Newton iterations on the tail
// function. Discrete quantiles sum the log-pmf upwards from zero.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>

#include "outbreak/common.hpp"

namespace outbreak::dist {

namespace detail {

inline constexpr double kEps = 1e-16;
inline constexpr double kTiny = 1e-300;

// Series for the regularized lower incomplete gamma, valid for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 10000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kEps) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for the regularized upper incomplete gamma, x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) {
            break;
        }
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Lentz continued fraction for the incomplete beta function.
inline double beta_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m < 10000; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) {
            break;
        }
    }
    return h;
}

// Solves tail(x) = target for x in (lo, hi), where tail is decreasing and
// slope(x) = -d tail/dx > 0. Newton steps leaving the bracket fall back to bisection.
template <typename Tail, typename Slope>
double invert_decreasing(Tail tail, Slope slope, double target, double x, double lo, double hi) {
    for (int iter = 0; iter < 300; ++iter) {
        const double f = tail(x) - target;
        if (f == 0.0) {
            return x;
        }
        if (f > 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        const double s = slope(x);
        double next = (s > 0.0 && std::isfinite(s)) ? x + f / s : std::numeric_limits<double>::quiet_NaN();
        if (!(next > lo && next < hi)) {
            next = std::isfinite(hi) ? 0.5 * (lo + hi) : (x > 0 ? 2.0 * x : x + 1.0);
            if (!std::isfinite(lo) && next <= lo) next = x - 1.0;
        }
        if (std::fabs(next - x) <= 1e-15 * std::max(1.0, std::fabs(x))) {
            return next;
        }
        x = next;
    }
    return x;
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x).
[[nodiscard]] inline double gamma_p(double a, double x) {
    require(a > 0.0 && x >= 0.0, "gamma_p: requires a > 0 and x >= 0");
    if (x == 0.0) return 0.0;
    return x < a + 1.0 ? detail::gamma_p_series(a, x) : 1.0 - detail::gamma_q_fraction(a, x);
}

/// Regularized upper incomplete gamma Q(a, x).
[[nodiscard]] inline double gamma_q(double a, double x) {
    require(a > 0.0 && x >= 0.0, "gamma_q: requires a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    return x < a + 1.0 ? 1.0 - detail::gamma_p_series(a, x) : detail::gamma_q_fraction(a, x);
}

/// Regularized incomplete beta I_x(a, b).
[[nodiscard]] inline double beta_inc(double a, double b, double x) {
    require(a > 0.0 && b > 0.0, "beta_inc: requires a, b > 0");
    require(x >= 0.0 && x <= 1.0, "beta_inc: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                  a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::beta_fraction(a, b, x) / a;
    }
    return 1.0 - front * detail::beta_fraction(b, a, 1.0 - x) / b;
}

// ---------------------------------------------------------------- normal

[[nodiscard]] inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
[[nodiscard]] inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }
[[nodiscard]] inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

/// Wichura's AS241 (PPND16), relative accuracy about 1e-16.
[[nodiscard]] inline double normal_quantile(double p) {
    require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0, 1)");
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                     1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                  4.6303378461565452959) * r + 1.42343711074968357734) /
                (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                     0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                  2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                     0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                  5.4637849111641143699) * r + 6.6579046435011037772) /
                (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                     7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                  0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

// ---------------------------------------------------------------- Student t

[[nodiscard]] inline double student_t_pdf(double df, double x) {
    require(df > 0.0, "student_t: df must be positive");
    return std::exp(std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * kPi) -
                    0.5 * (df + 1.0) * std::log1p(x * x / df));
}

/// Upper tail P(T > x).
[[nodiscard]] inline double student_t_sf(double df, double x) {
    require(df > 0.0, "student_t: df must be positive");
    const double tail = 0.5 * beta_inc(0.5 * df, 0.5, df / (df + x * x));
    return x >= 0.0 ? tail : 1.0 - tail;
}

[[nodiscard]] inline double student_t_cdf(double df, double x) { return student_t_sf(df, -x); }

[[nodiscard]] inline double student_t_quantile(double df, double p) {
    require(df > 0.0, "student_t_quantile: df must be positive");
    require(p > 0.0 && p < 1.0, "student_t_quantile: p must lie in (0, 1)");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -student_t_quantile(df, 1.0 - p);
    const double z = normal_quantile(p);
    const double z3 = z * z * z;
    const double z5 = z3 * z * z;
    double guess = z + (z3 + z) / (4.0 * df) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * df * df);
    if (!(guess > 0.0) || !std::isfinite(guess)) guess = z;
    return detail::invert_decreasing([df](double x) { return student_t_sf(df, x); },
                                     [df](double x) { return student_t_pdf(df, x); }, 1.0 - p, guess, 0.0,
                                     kInf);
}

// ---------------------------------------------------------------- F

[[nodiscard]] inline double f_pdf(double d1, double d2, double x) {
    require(d1 > 0.0 && d2 > 0.0, "f distribution: degrees of freedom must be positive");
    if (x <= 0.0) return 0.0;
    const double log_pdf = 0.5 * d1 * std::log(d1) + 0.5 * d2 * std::log(d2) + (0.5 * d1 - 1.0) * std::log(x) -
                           0.5 * (d1 + d2) * std::log(d2 + d1 * x) - std::lgamma(0.5 * d1) - std::lgamma(0.5 * d2) +
                           std::lgamma(0.5 * (d1 + d2));
    return std::exp(log_pdf);
}

[[nodiscard]] inline double f_sf(double d1, double d2, double x) {
    require(d1 > 0.0 && d2 > 0.0, "f distribution: degrees of freedom must be positive");
    if (x <= 0.0) return 1.0;
    return beta_inc(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * x));
}

[[nodiscard]] inline double f_cdf(double d1, double d2, double x) {
    require(d1 > 0.0 && d2 > 0.0, "f distribution: degrees of freedom must be positive");
    if (x <= 0.0) return 0.0;
    return beta_inc(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2));
}

[[nodiscard]] inline double f_quantile(double d1, double d2, double p) {
    require(d1 > 0.0 && d2 > 0.0, "f_quantile: degrees of freedom must be positive");
    require(p > 0.0 && p < 1.0, "f_quantile: p must lie in (0, 1)");
    // Paulson: ((1-b) y - (1-a)) / sqrt(b y^2 + a) ~ N(0,1) with y = F^(1/3).
    const double a = 2.0 / (9.0 * d1);
    const double b = 2.0 / (9.0 * d2);
    const double z = normal_quantile(p);
    const double qa = (1.0 - b) * (1.0 - b) - z * z * b;
    const double qb = -2.0 * (1.0 - a) * (1.0 - b);
    const double qc = (1.0 - a) * (1.0 - a) - z * z * a;
    double guess = 1.0;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (qa > 0.0 && disc >= 0.0) {
        const double root = (z >= 0.0 ? -qb + std::sqrt(disc) : -qb - std::sqrt(disc)) / (2.0 * qa);
        if (root > 0.0) guess = root * root * root;
    }
    return detail::invert_decreasing([=](double x) { return f_sf(d1, d2, x); },
                                     [=](double x) { return f_pdf(d1, d2, x); }, 1.0 - p, guess, 0.0, kInf);
}

// ---------------------------------------------------------------- Poisson

[[nodiscard]] inline double poisson_log_pmf(double lambda, std::int64_t k) {
    require(lambda >= 0.0, "poisson: lambda must be non-negative");
    if (k < 0) return -kInf;
    if (lambda == 0.0) return k == 0 ? 0.0 : -kInf;
    const auto kd = static_cast<double>(k);
    return kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0);
}

[[nodiscard]] inline double poisson_pmf(double lambda, std::int64_t k) { return std::exp(poisson_log_pmf(lambda, k)); }

/// P(X <= k).
[[nodiscard]] inline double poisson_cdf(double lambda, std::int64_t k) {
    require(lambda >= 0.0, "poisson: lambda must be non-negative");
    if (k < 0) return 0.0;
    if (lambda == 0.0) return 1.0;
    return gamma_q(static_cast<double>(k) + 1.0, lambda);
}

/// Survivor function P(X > k).
[[nodiscard]] inline double poisson_sf(double lambda, std::int64_t k) {
    require(lambda >= 0.0, "poisson: lambda must be non-negative");
    if (k < 0) return 1.0;
    if (lambda == 0.0) return 0.0;
    return gamma_p(static_cast<double>(k) + 1.0, lambda);
}

/// P(X > x) for a real threshold x, i.e. the probability of exceeding a limit.
[[nodiscard]] inline double poisson_exceedance(double lambda, double x) {
    return poisson_sf(lambda, static_cast<std::int64_t>(std::floor(x)));
}

/// Smallest k with P(X <= k) >= p.
[[nodiscard]] inline std::int64_t poisson_quantile(double lambda, double p) {
    require(lambda >= 0.0, "poisson_quantile: lambda must be non-negative");
    require(p > 0.0 && p < 1.0, "poisson_quantile: p must lie in (0, 1)");
    if (lambda == 0.0) return 0;
    std::int64_t k = 0;
    double cdf = poisson_pmf(lambda, 0);
    while (cdf < p) {
        ++k;
        const double term = poisson_pmf(lambda, k);
        cdf += term;
        if (term == 0.0 && static_cast<double>(k) > lambda) break;
    }
    return k;
}

// ---------------------------------------------------------------- negative binomial

/// NegBin with the given mean and size (dispersion) parameter; variance = mean + mean^2 / size.
[[nodiscard]] inline double negbin_log_pmf(double mean, double size, std::int64_t k) {
    require(mean >= 0.0 && size > 0.0, "negbin: requires mean >= 0 and size > 0");
    if (k < 0) return -kInf;
    if (mean == 0.0) return k == 0 ? 0.0 : -kInf;
    const auto kd = static_cast<double>(k);
    return std::lgamma(kd + size) - std::lgamma(size) - std::lgamma(kd + 1.0) + size * std::log(size / (size + mean)) +
           kd * std::log(mean / (size + mean));
}

[[nodiscard]] inline double negbin_cdf(double mean, double size, std::int64_t k) {
    require(mean >= 0.0 && size > 0.0, "negbin: requires mean >= 0 and size > 0");
    if (k < 0) return 0.0;
    if (mean == 0.0) return 1.0;
    return beta_inc(size, static_cast<double>(k) + 1.0, size / (size + mean));
}

[[nodiscard]] inline std::int64_t negbin_quantile(double mean, double size, double p) {
    require(mean >= 0.0 && size > 0.0, "negbin_quantile: requires mean >= 0 and size > 0");
    require(p > 0.0 && p < 1.0, "negbin_quantile: p must lie in (0, 1)");
    if (mean == 0.0) return 0;
    std::int64_t k = 0;
    double cdf = std::exp(negbin_log_pmf(mean, size, 0));
    while (cdf < p) {
        ++k;
        const double term = std::exp(negbin_log_pmf(mean, size, k));
        cdf += term;
        if (term == 0.0 && static_cast<double>(k) > mean) break;
    }
    return k;
}

// ---------------------------------------------------------------- Gumbel

struct Gumbel {
    double location = 0.0;
    double scale = 1.0;

    [[nodiscard]] double cdf(double x) const { return std::exp(-std::exp(-(x - location) / scale)); }
    [[nodiscard]] double sf(double x) const { return -std::expm1(-std::exp(-(x - location) / scale)); }
    [[nodiscard]] double mean() const { return location + kEulerGamma * scale; }
};

/// Method-of-moments fit: scale = sd * sqrt(6) / pi, location = mean - gamma * scale.
[[nodiscard]] inline Gumbel fit_gumbel(std::span<const double> samples) {
    require(samples.size() >= 2, "fit_gumbel: need at least two samples");
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    require(sd > 0.0, "fit_gumbel: samples have zero variance");
    Gumbel g;
    g.scale = sd * std::sqrt(6.0) / kPi;
    g.location = mean - kEulerGamma * g.scale;
    return g;
}

[[nodiscard]] inline double gumbel_fit_and_sf(std::span<const double> samples, double x) {
    return fit_gumbel(samples).sf(x);
}

}  // namespace outbreak::dist
