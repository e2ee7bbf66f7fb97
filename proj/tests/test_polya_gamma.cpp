#include <gtest/gtest.h>

#include <cmath>

#include "hepm/common.hpp"
#include "hepm/polya_gamma.hpp"

using namespace hepm;

TEST(PolyaGamma, ExpectationClosedForm) {
    EXPECT_NEAR(pg_expectation(2.0, 2.0), 0.3807970, 1e-7);
    EXPECT_EQ(pg_expectation(1.0, 0.0), 0.25);
    EXPECT_EQ(pg_expectation(3.0, 0.0), 0.75);
    EXPECT_DOUBLE_EQ(pg_expectation(1.5, -1.3), pg_expectation(1.5, 1.3));
    EXPECT_THROW(pg_expectation(0.0, 1.0), DomainError);
    EXPECT_THROW(pg_expectation(-1.0, 1.0), DomainError);
}

TEST(PolyaGamma, ExpectationContinuousAcrossSeriesBranch) {
    for (double c : {0.99e-4, 1.01e-4, 1e-3, 1e-6}) {
        const double direct = 1.0 / (2.0 * c) * std::tanh(c / 2.0);
        EXPECT_NEAR(pg_expectation(1.0, c), direct, 1e-12) << c;
    }
}

TEST(PolyaGamma, Variance) {
    EXPECT_NEAR(pg_variance(1.0, 0.0), 1.0 / 24.0, 1e-15);
    for (double c : {0.5, 2.0, 10.0}) {
        const double direct = (std::sinh(c) - c) / (4.0 * c * c * c * std::cosh(c / 2.0) * std::cosh(c / 2.0));
        EXPECT_NEAR(pg_variance(1.0, c), direct, 1e-12 * direct);
    }
    EXPECT_NEAR(pg_variance(1.0, 0.00999), pg_variance(1.0, 0.01001), 1e-8);
    EXPECT_TRUE(std::isfinite(pg_variance(1.0, 800.0)));
    EXPECT_GT(pg_variance(1.0, 800.0), 0.0);
    EXPECT_NEAR(pg_variance(2.0, 1.0), 2.0 * pg_variance(1.0, 1.0), 1e-15);
}

TEST(PolyaGamma, SamplerMoments) {
    Rng rng(1);
    for (double b : {0.7, 3.0}) {
        for (double c : {0.0, 1.5}) {
            const int n = 200000;
            double s = 0.0;
            double s2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double w = sample_pg(b, c, rng);
                ASSERT_GT(w, 0.0);
                s += w;
                s2 += w * w;
            }
            const double mean = s / n;
            const double var = s2 / n - mean * mean;
            EXPECT_NEAR(mean, pg_expectation(b, c), 0.01 * pg_expectation(b, c));
            EXPECT_NEAR(var, pg_variance(b, c), 0.05 * pg_variance(b, c));
        }
    }
}

TEST(PolyaGamma, SamplerIsSeedDeterministic) {
    Rng a(3);
    Rng b(3);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_pg(1.0, 0.3, a), sample_pg(1.0, 0.3, b));
    EXPECT_THROW(sample_pg(0.0, 1.0, a), DomainError);
}
