#include <gtest/gtest.h>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/negative_binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "outbreak/distributions.hpp"

namespace dist = outbreak::dist;
namespace bm = boost::math;

namespace {

double rel_err(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

}  // namespace

TEST(Distributions, NormalQuantileMatchesBoost) {
    bm::normal n;
    for (double p : {1e-12, 1e-6, 0.00135, 0.025, 0.3, 0.5, 0.7, 0.975, 0.99865, 1 - 1e-9}) {
        EXPECT_LT(std::fabs(dist::normal_quantile(p) - bm::quantile(n, p)), 1e-12 * std::max(1.0, std::fabs(bm::quantile(n, p))))
            << p;
    }
}

TEST(Distributions, StudentTQuantileMatchesBoostToTenDigits) {
    for (double df : {1.0, 2.0, 3.5, 6.0, 20.0, 150.0}) {
        bm::students_t t(df);
        for (double p : {0.001, 0.05, 0.3, 0.6, 0.9, 0.95, 0.99865, 0.9999}) {
            EXPECT_LT(rel_err(dist::student_t_quantile(df, p), bm::quantile(t, p)), 1e-10) << df << " " << p;
        }
        for (double x : {-4.0, -0.5, 0.0, 1.0, 2.806, 10.0}) {
            EXPECT_LT(rel_err(dist::student_t_sf(df, x), bm::cdf(bm::complement(t, x))), 1e-12) << df << " " << x;
        }
    }
}

TEST(Distributions, FQuantileMatchesBoostToTenDigits) {
    for (auto [d1, d2] : std::vector<std::pair<double, double>>{{1, 1}, {2, 5}, {16, 9}, {16, 300}, {3, 1000}}) {
        bm::fisher_f f(d1, d2);
        for (double p : {0.01, 0.5, 0.9, 1.0 - 1.0 / 36.0, 0.999}) {
            EXPECT_LT(rel_err(dist::f_quantile(d1, d2, p), bm::quantile(f, p)), 1e-10) << d1 << " " << d2 << " " << p;
        }
    }
}

TEST(Distributions, TailOfStudentTAtThreeSdRule) {
    const double x = 3.0 / std::sqrt(1.0 + 1.0 / 7.0);
    EXPECT_NEAR(dist::student_t_sf(6.0, x), 0.0155, 5e-4);
}

TEST(Distributions, PoissonTailsMatchDirectSummation) {
    for (double lambda : {0.3, 12.0 / 7.0, 7.1, 50.0 / 7.0, 40.0}) {
        for (std::int64_t k : {0, 3, 15, 60}) {
            double direct = 0.0;
            for (std::int64_t j = k + 1; j < 400; ++j) direct += dist::poisson_pmf(lambda, j);
            EXPECT_LT(std::fabs(dist::poisson_sf(lambda, k) - direct), 1e-14 + 1e-12 * direct) << lambda << " " << k;
            EXPECT_NEAR(dist::poisson_cdf(lambda, k) + dist::poisson_sf(lambda, k), 1.0, 1e-14);
        }
    }
}

TEST(Distributions, PoissonQuantileOfFarringtonExample) {
    EXPECT_EQ(dist::poisson_quantile(7.1, 0.99865), 16);
    EXPECT_EQ(dist::poisson_quantile(50.0 / 7.0, 0.99865), 16);
}

TEST(Distributions, DiscreteQuantileSurvivorConsistency) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lam(0.05, 80.0);
    std::uniform_real_distribution<double> prob(0.001, 0.9999);
    for (int rep = 0; rep < 500; ++rep) {
        const double l = lam(rng);
        const double p = prob(rng);
        const auto q = dist::poisson_quantile(l, p);
        EXPECT_LE(dist::poisson_sf(l, q), 1.0 - p + 1e-12);
        EXPECT_GT(dist::poisson_sf(l, q - 1), 1.0 - p - 1e-12);
    }
}

TEST(Distributions, NegBinQuantileMatchesBoost) {
    for (auto [mean, size] : std::vector<std::pair<double, double>>{{7.1, 3.0}, {20.0, 0.7}, {2.0, 50.0}}) {
        // Boost parameterizes by (successes r, success probability p).
        bm::negative_binomial nb(size, size / (size + mean));
        for (double p : {0.1, 0.5, 0.95, 0.99865}) {
            const auto q = dist::negbin_quantile(mean, size, p);
            EXPECT_GE(bm::cdf(nb, static_cast<double>(q)), p - 1e-12);
            if (q > 0) {
                EXPECT_LT(bm::cdf(nb, static_cast<double>(q - 1)), p + 1e-12);
            }
        }
        for (std::int64_t k : {0, 3, 10}) {
            EXPECT_LT(rel_err(dist::negbin_cdf(mean, size, k), bm::cdf(nb, static_cast<double>(k))), 1e-12);
        }
    }
}

TEST(Distributions, NegBinTendsToPoissonForLargeSize) {
    EXPECT_EQ(dist::negbin_quantile(7.1, 1e9, 0.99865), dist::poisson_quantile(7.1, 0.99865));
}

TEST(Distributions, GumbelSurvivorAtFittedMean) {
    std::vector<double> samples;
    std::mt19937_64 rng(3);
    std::extreme_value_distribution<double> ev(2.0, 0.7);
    for (int i = 0; i < 2000; ++i) samples.push_back(ev(rng));
    const auto g = dist::fit_gumbel(samples);
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    const double p = g.sf(mean);
    EXPECT_NEAR(p, 1.0 - std::exp(-std::exp(-outbreak::kEulerGamma)), 1e-12);
    EXPECT_GE(p, 0.40);
    EXPECT_LE(p, 0.45);
    EXPECT_LT(g.sf(1e6), 1e-300);
}

TEST(Distributions, RejectsInvalidParameters) {
    EXPECT_THROW((void)dist::student_t_quantile(0.0, 0.5), std::invalid_argument);
    EXPECT_THROW((void)dist::normal_quantile(1.0), std::invalid_argument);
    EXPECT_THROW((void)dist::f_quantile(2.0, -1.0, 0.5), std::invalid_argument);
    EXPECT_THROW((void)dist::poisson_quantile(-1.0, 0.5), std::invalid_argument);
    EXPECT_THROW((void)dist::negbin_quantile(1.0, 0.0, 0.5), std::invalid_argument);
}
