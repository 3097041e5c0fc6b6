#pragma once

// Quasi-Poisson log-linear regression fitted by iteratively reweighted least
// squares, and the one-sided prediction limit built on it.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "outbreak/common.hpp"
#include "outbreak/distributions.hpp"

namespace outbreak::glm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Floor for the fitted mean when the response is identically zero.
inline constexpr double kZeroMean = 1e-8;

struct IrlsOptions {
    int max_iterations = 50;
    double tolerance = 1e-12;  ///< on |dev - dev_prev| / (|dev| + 0.1)
};

struct GlmFit {
    Vector coefficients;
    Matrix covariance;  ///< dispersion * (X' W X)^-1
    double dispersion = 1.0;      ///< clamped to >= 1
    double raw_dispersion = 1.0;  ///< Pearson chi^2 / (n - p) before clamping
    Vector weights;               ///< prior weights used
    Vector fitted;                ///< mu at the solution
    double deviance = 0.0;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;  ///< response summed to zero

    [[nodiscard]] Eigen::Index parameters() const { return coefficients.size(); }
};

namespace detail {

inline double poisson_deviance(const Vector& y, const Vector& mu, const Vector& w) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        dev += w[i] * (xlogy_ratio(y[i], mu[i]) - (y[i] - mu[i]));
    }
    return 2.0 * dev;
}

}  // namespace detail

/// Gradient of the weighted Poisson log-likelihood with respect to the coefficients.
[[nodiscard]] inline Vector score(const Matrix& design, const Vector& response, const Vector& weights,
                                  const Vector& coefficients) {
    const Vector mu = (design * coefficients).array().exp().matrix();
    return design.transpose() * (weights.array() * (response - mu).array()).matrix();
}

/// Weighted Poisson log-likelihood up to the constant -sum w log y!.
[[nodiscard]] inline double log_likelihood(const Matrix& design, const Vector& response, const Vector& weights,
                                           const Vector& coefficients) {
    const Vector eta = design * coefficients;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += weights[i] * (response[i] * eta[i] - std::exp(eta[i]));
    return ll;
}

/// IRLS maximizer of the Poisson likelihood with log link, dispersion from the
/// Pearson statistic, and covariance scaled by the (clamped) dispersion.
/// Non-convergence is reported through `converged`, not an exception.
[[nodiscard]] inline GlmFit fit_quasipoisson(const Matrix& design, const Vector& response,
                                             std::optional<Vector> prior_weights = std::nullopt,
                                             const IrlsOptions& options = {}) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    require(response.size() == n, "fit_quasipoisson: response length must match design rows");
    require(p >= 1 && n >= p + 1, "fit_quasipoisson: need at least one more row than coefficients");
    for (Eigen::Index i = 0; i < n; ++i) {
        require(response[i] >= 0.0 && std::isfinite(response[i]), "fit_quasipoisson: response must be non-negative");
    }
    const Vector w = prior_weights.value_or(Vector::Ones(n));
    require(w.size() == n, "fit_quasipoisson: weight length must match design rows");
    require((w.array() >= 0.0).all() && w.sum() > 0.0, "fit_quasipoisson: weights must be non-negative, not all zero");

    GlmFit fit;
    fit.weights = w;
    const double weighted_total = w.dot(response);
    const double weighted_mean = weighted_total / w.sum();

    if (weighted_total == 0.0) {
        fit.degenerate = true;
        fit.converged = true;
        fit.coefficients = Vector::Zero(p);
        fit.coefficients[0] = std::log(kZeroMean);
        fit.covariance = Matrix::Zero(p, p);
        fit.fitted = Vector::Constant(n, kZeroMean);
        fit.deviance = detail::poisson_deviance(response, fit.fitted, w);
        return fit;
    }

    Vector beta = Vector::Zero(p);
    beta[0] = std::log(weighted_mean + 0.5);
    Vector mu = (design * beta).array().exp().matrix();
    double dev = detail::poisson_deviance(response, mu, w);

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        const Vector eta = design * beta;
        const Vector z = eta + ((response - mu).array() / mu.array()).matrix();
        const Vector working = (w.array() * mu.array()).matrix();
        const Matrix xtwx = design.transpose() * working.asDiagonal() * design;
        const Vector xtwz = design.transpose() * (working.array() * z.array()).matrix();
        beta = xtwx.ldlt().solve(xtwz);
        mu = (design * beta).array().exp().matrix();
        const double dev_new = detail::poisson_deviance(response, mu, w);
        fit.iterations = iter;
        const bool small_change = std::fabs(dev_new - dev) / (std::fabs(dev_new) + 0.1) < options.tolerance;
        dev = dev_new;
        if (!std::isfinite(dev)) break;
        if (small_change) {
            fit.converged = true;
            break;
        }
    }

    fit.coefficients = beta;
    fit.fitted = mu;
    fit.deviance = dev;
    double pearson = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) pearson += w[i] * (response[i] - mu[i]) * (response[i] - mu[i]) / mu[i];
    fit.raw_dispersion = pearson / static_cast<double>(n - p);
    fit.dispersion = std::max(1.0, fit.raw_dispersion);
    const Matrix info = design.transpose() * (w.array() * mu.array()).matrix().asDiagonal() * design;
    fit.covariance = fit.dispersion * info.ldlt().solve(Matrix::Identity(p, p));
    return fit;
}

enum class Scale { kIdentity, kSqrt, kTwoThirds, kNegBinQuantile };

[[nodiscard]] inline const char* to_string(Scale s) {
    switch (s) {
        case Scale::kIdentity: return "identity";
        case Scale::kSqrt: return "sqrt";
        case Scale::kTwoThirds: return "two-thirds";
        case Scale::kNegBinQuantile: return "negbin-quantile";
    }
    return "?";
}

struct PredictiveInterval {
    double mean = 0.0;
    double upper = 0.0;
    Scale scale = Scale::kIdentity;
    double alpha = 0.05;
    double mean_variance = 0.0;  ///< V(mu_hat) by the delta method
};

/// Upper limit of the one-sided (1 - alpha) prediction interval at covariate row x.
///
/// V(y - mu) = phi mu + V(mu), V(mu) = mu^2 x' Cov(beta) x. Power scales apply the
/// delta method to g(y) = y^p and back-transform the limit; the negative binomial
/// scale returns the (1 - alpha) quantile of NegBin(mu, mu / (phi - 1)), which is the
/// Poisson quantile when phi = 1.
[[nodiscard]] inline PredictiveInterval predict_upper(const GlmFit& fit, const Vector& x, double alpha, Scale scale) {
    require(alpha > 0.0 && alpha <= 0.5, "predict_upper: alpha must lie in (0, 0.5]");
    require(x.size() == fit.coefficients.size(), "predict_upper: covariate row has the wrong length");
    require(fit.converged, "predict_upper: fit did not converge");
    const double eta = x.dot(fit.coefficients);
    const double mu = std::exp(eta);
    const double var_eta = std::max(0.0, x.dot(fit.covariance * x));
    const double var_mu = mu * mu * var_eta;
    const double var_pred = fit.dispersion * mu + var_mu;
    const double z = dist::normal_quantile(1.0 - alpha);

    PredictiveInterval out;
    out.mean = mu;
    out.scale = scale;
    out.alpha = alpha;
    out.mean_variance = var_mu;
    switch (scale) {
        case Scale::kIdentity:
            out.upper = mu + z * std::sqrt(var_pred);
            break;
        case Scale::kSqrt:
        case Scale::kTwoThirds: {
            const double power = scale == Scale::kSqrt ? 0.5 : 2.0 / 3.0;
            const double slope = power * std::pow(mu, power - 1.0);
            const double limit = std::pow(mu, power) + z * slope * std::sqrt(var_pred);
            out.upper = std::pow(std::max(limit, 0.0), 1.0 / power);
            break;
        }
        case Scale::kNegBinQuantile: {
            const double p = 1.0 - alpha;
            if (fit.dispersion > 1.0) {
                out.upper = static_cast<double>(dist::negbin_quantile(mu, mu / (fit.dispersion - 1.0), p));
            } else {
                out.upper = static_cast<double>(dist::poisson_quantile(mu, p));
            }
            break;
        }
    }
    return out;
}

}  // namespace outbreak::glm
