#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "outbreak/glm.hpp"

using namespace outbreak;
using glm::Matrix;
using glm::Vector;

namespace {

Matrix trend_design(int n, double offset = 0.0) {
    Matrix x(n, 2);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = i + offset;
    }
    return x;
}

Vector simulate_loglinear(const Matrix& x, const Vector& beta, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Vector y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        std::poisson_distribution<long> pois(std::exp(x.row(i).dot(beta)));
        y[i] = static_cast<double>(pois(rng));
    }
    return y;
}

// Plain Newton-Raphson on the two-parameter Poisson log-likelihood with a
// hand-inverted Hessian; shares no code with the IRLS path.
std::pair<double, double> newton_oracle(const Matrix& x, const Vector& y, const Vector& w) {
    double b0 = std::log(y.mean() + 1.0), b1 = 0.0;
    for (int it = 0; it < 200; ++it) {
        double g0 = 0, g1 = 0, h00 = 0, h01 = 0, h11 = 0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double s = x(i, 1);
            const double mu = std::exp(b0 + b1 * s);
            g0 += w[i] * (y[i] - mu);
            g1 += w[i] * (y[i] - mu) * s;
            h00 += w[i] * mu;
            h01 += w[i] * mu * s;
            h11 += w[i] * mu * s * s;
        }
        const double det = h00 * h11 - h01 * h01;
        const double d0 = (h11 * g0 - h01 * g1) / det;
        const double d1 = (-h01 * g0 + h00 * g1) / det;
        b0 += d0;
        b1 += d1;
        if (std::fabs(d0) + std::fabs(d1) < 1e-14) break;
    }
    return {b0, b1};
}

// Maximizes the weighted log-likelihood by successive grid refinement around the
// current best point; derivative-free.
std::pair<double, double> grid_oracle(const Matrix& x, const Vector& y, const Vector& w) {
    auto ll = [&](double b0, double b1) {
        double v = 0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double eta = b0 + b1 * x(i, 1);
            v += w[i] * (y[i] * eta - std::exp(eta));
        }
        return v;
    };
    double c0 = std::log(y.mean() + 0.5), c1 = 0.0, span0 = 2.0, span1 = 0.2;
    for (int round = 0; round < 60; ++round) {
        double best = -kInf, b0 = c0, b1 = c1;
        for (int i = -10; i <= 10; ++i) {
            for (int j = -10; j <= 10; ++j) {
                const double a = c0 + span0 * i / 10.0, b = c1 + span1 * j / 10.0;
                const double v = ll(a, b);
                if (v > best) {
                    best = v;
                    b0 = a;
                    b1 = b;
                }
            }
        }
        c0 = b0;
        c1 = b1;
        span0 *= 0.5;
        span1 *= 0.5;
    }
    return {c0, c1};
}

}  // namespace

TEST(FitQuasiPoisson, ConstantResponseIsItsOwnMean) {
    Matrix x = Matrix::Ones(3, 1);
    Vector y(3);
    y << 3, 3, 3;
    auto fit = glm::fit_quasipoisson(x, y);
    ASSERT_TRUE(fit.converged);
    EXPECT_NEAR(fit.coefficients[0], std::log(3.0), 1e-10);
    EXPECT_NEAR(fit.fitted[1], 3.0, 1e-9);
    EXPECT_DOUBLE_EQ(fit.dispersion, 1.0);
}

TEST(FitQuasiPoisson, TrendRecoveredAndMatchesNewtonOracle) {
    const Matrix x = trend_design(100);
    Vector truth(2);
    truth << 1.0, 0.02;
    const Vector y = simulate_loglinear(x, truth, 2024);
    auto fit = glm::fit_quasipoisson(x, y);
    ASSERT_TRUE(fit.converged);
    auto [b0, b1] = newton_oracle(x, y, Vector::Ones(100));
    EXPECT_NEAR(fit.coefficients[0], b0, 1e-7);
    EXPECT_NEAR(fit.coefficients[1], b1, 1e-9);
    for (int k = 0; k < 2; ++k) {
        EXPECT_LT(std::fabs(fit.coefficients[k] - truth[k]), 3.0 * std::sqrt(fit.covariance(k, k)));
    }
}

TEST(FitQuasiPoisson, HalvedWeightsKeepCoefficientsAndHalveDispersion) {
    const Matrix x = trend_design(40);
    Vector truth(2);
    truth << 2.0, 0.01;
    Vector y = simulate_loglinear(x, truth, 99);
    // Inflate variance so the dispersion stays above one under both weightings.
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = (i % 3 == 0) ? y[i] * 3.0 : std::floor(y[i] / 2.0);
    const auto full = glm::fit_quasipoisson(x, y, Vector::Ones(40));
    const auto half = glm::fit_quasipoisson(x, y, Vector::Constant(40, 0.5));
    auto [g0, g1] = grid_oracle(x, y, Vector::Constant(40, 0.5));
    EXPECT_NEAR(half.coefficients[0], g0, 1e-6);
    EXPECT_NEAR(half.coefficients[1], g1, 1e-7);
    EXPECT_NEAR(full.coefficients[0], half.coefficients[0], 1e-10);
    EXPECT_NEAR(full.coefficients[1], half.coefficients[1], 1e-12);
    ASSERT_GT(half.raw_dispersion, 1.0);
    EXPECT_NEAR(half.raw_dispersion, 0.5 * full.raw_dispersion, 1e-10);
}

TEST(FitQuasiPoisson, ScoreVanishesAtEveryFit) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-0.05, 0.05);
    std::uniform_real_distribution<double> level(-1.0, 4.0);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 8 + static_cast<int>(rng() % 60);
        Matrix x(n, 3);
        for (int i = 0; i < n; ++i) {
            x(i, 0) = 1.0;
            x(i, 1) = i;
            x(i, 2) = std::sin(2 * kPi * i / 12.0);
        }
        Vector beta(3);
        beta << level(rng), coef(rng), coef(rng) * 10.0;
        const Vector y = simulate_loglinear(x, beta, rng());
        if (y.sum() == 0.0) continue;
        const auto fit = glm::fit_quasipoisson(x, y);
        if (!fit.converged) continue;
        EXPECT_LT(glm::score(x, y, fit.weights, fit.coefficients).cwiseAbs().maxCoeff(), 1e-6) << rep;
    }
}

TEST(FitQuasiPoisson, AnalyticGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix x = trend_design(15, -7.0);
        Vector beta(2);
        beta << 1.0 + 0.1 * rep, 0.01 * (rep % 5);
        const Vector y = simulate_loglinear(x, beta, rng());
        const Vector w = Vector::Ones(15);
        Vector at(2);
        at << 0.7, -0.03;
        const Vector g = glm::score(x, y, w, at);
        for (int k = 0; k < 2; ++k) {
            const double h = 1e-5;
            Vector up = at, down = at;
            up[k] += h;
            down[k] -= h;
            const double fd = (glm::log_likelihood(x, y, w, up) - glm::log_likelihood(x, y, w, down)) / (2 * h);
            EXPECT_NEAR(g[k], fd, 1e-6 * std::max(1.0, std::fabs(fd)));
        }
    }
}

TEST(FitQuasiPoisson, AllZeroResponseIsDegenerate) {
    Matrix x = trend_design(6);
    auto fit = glm::fit_quasipoisson(x, Vector::Zero(6));
    EXPECT_TRUE(fit.degenerate);
    EXPECT_NEAR(fit.fitted[0], glm::kZeroMean, 1e-20);
}

TEST(FitQuasiPoisson, RejectsTooFewRows) {
    EXPECT_THROW((void)glm::fit_quasipoisson(trend_design(2), Vector::Ones(2)), std::invalid_argument);
}

TEST(PredictUpper, ZeroCovarianceUsesPoissonVarianceOnly) {
    glm::GlmFit fit;
    fit.coefficients = Vector::Constant(1, std::log(4.0));
    fit.covariance = Matrix::Zero(1, 1);
    fit.converged = true;
    const double alpha = dist::normal_sf(3.0);
    auto pi = glm::predict_upper(fit, Vector::Ones(1), alpha, glm::Scale::kIdentity);
    EXPECT_NEAR(pi.upper, 10.0, 1e-9);
}

TEST(PredictUpper, PoissonQuantileWhenDispersionIsOne) {
    glm::GlmFit fit;
    fit.coefficients = Vector::Constant(1, std::log(7.1));
    fit.covariance = Matrix::Zero(1, 1);
    fit.converged = true;
    auto pi = glm::predict_upper(fit, Vector::Ones(1), 0.00135, glm::Scale::kNegBinQuantile);
    EXPECT_EQ(pi.upper, 16.0);
}

TEST(PredictUpper, InterceptOnlyComparisonLimits) {
    // Seven historic values with mean 50/7 and sd 2.61 (the b = 1, w = 3 comparison).
    Vector y(7);
    y << 2, 6, 7, 8, 8, 9, 10;
    auto fit = glm::fit_quasipoisson(Matrix::Ones(7, 1), y);
    EXPECT_DOUBLE_EQ(fit.dispersion, 1.0);
    const Vector x = Vector::Ones(1);
    EXPECT_NEAR(glm::predict_upper(fit, x, 0.00135, glm::Scale::kIdentity).upper, 15.7, 0.05);
    EXPECT_NEAR(glm::predict_upper(fit, x, 0.00135, glm::Scale::kTwoThirds).upper, 17.2, 0.05);
    EXPECT_EQ(glm::predict_upper(fit, x, 0.00135, glm::Scale::kNegBinQuantile).upper, 16.0);
}

TEST(PredictUpper, MonotoneInAlphaOnEveryScale) {
    const Matrix x = trend_design(30);
    Vector beta(2);
    beta << 1.5, 0.01;
    Vector y = simulate_loglinear(x, beta, 5);
    for (Eigen::Index i = 0; i < y.size(); i += 4) y[i] *= 2;
    const auto fit = glm::fit_quasipoisson(x, y);
    Vector at(2);
    at << 1.0, 31.0;
    for (auto scale : {glm::Scale::kIdentity, glm::Scale::kSqrt, glm::Scale::kTwoThirds, glm::Scale::kNegBinQuantile}) {
        double previous = kInf;
        for (double alpha : {0.0001, 0.001, 0.01, 0.05, 0.2, 0.49}) {
            const auto pi = glm::predict_upper(fit, at, alpha, scale);
            EXPECT_LE(pi.upper, previous + 1e-12);
            if (scale != glm::Scale::kNegBinQuantile) {
                EXPECT_GE(pi.upper, pi.mean);
            }
            previous = pi.upper;
        }
    }
}

TEST(PredictUpper, RejectsAlphaOutsideRange) {
    auto fit = glm::fit_quasipoisson(Matrix::Ones(3, 1), Vector::Constant(3, 2.0));
    EXPECT_THROW((void)glm::predict_upper(fit, Vector::Ones(1), 0.0, glm::Scale::kIdentity), std::invalid_argument);
    EXPECT_THROW((void)glm::predict_upper(fit, Vector::Ones(1), 0.6, glm::Scale::kIdentity), std::invalid_argument);
}
