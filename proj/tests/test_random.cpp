#include <gtest/gtest.h>

#include <cmath>

#include "hepm/random.hpp"

using namespace hepm;

TEST(Random, ZeroTruncatedPoissonMean) {
    Rng rng(1);
    for (double rate : {0.05, 0.7, 1.0, 4.0}) {
        const int n = 100000;
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto x = sample_zero_truncated_poisson(rate, rng);
            ASSERT_GE(x, 1u);
            s += static_cast<double>(x);
        }
        const double mean = rate / -std::expm1(-rate);
        EXPECT_NEAR(s / n, mean, 0.01 * mean) << rate;
    }
}

TEST(Random, CrtMean) {
    Rng rng(2);
    for (auto [n, r] : {std::pair<std::uint64_t, double>{10, 0.5}, {200, 3.0}}) {
        double expected = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) expected += r / (r + static_cast<double>(i));
        double s = 0.0;
        const int reps = 50000;
        for (int i = 0; i < reps; ++i) s += static_cast<double>(sample_crt(n, r, rng));
        EXPECT_NEAR(s / reps, expected, 4.0 * std::sqrt(expected / reps)) << n;
    }
    // past the exact range the tail is a Poisson with the same mean
    const std::uint64_t n = 4000000;
    const double r = 2.0;
    double expected = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) expected += r / (r + static_cast<double>(i));
    double s = 0.0;
    const int reps = 60;
    for (int i = 0; i < reps; ++i) s += static_cast<double>(sample_crt(n, r, rng));
    EXPECT_NEAR(s / reps, expected, 4.0 * std::sqrt(expected / reps));
}

TEST(Random, SliceSamplerTargetsDensity) {
    // log x for x ~ Gamma(3, 1): density proportional to exp(3y - e^y); E[log x] = digamma(3)
    Rng rng(3);
    auto logf = [](double y) { return 3.0 * y - std::exp(y); };
    double y = 0.0;
    const int n = 200000;
    double s = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        y = slice_sample(logf, y, 1.0, rng);
        s += y;
        s2 += y * y;
    }
    const double digamma3 = 1.5 - 0.5772156649015329;
    const double trigamma3 = M_PI * M_PI / 6.0 - 1.25;
    EXPECT_NEAR(s / n, digamma3, 0.01);
    EXPECT_NEAR(s2 / n - (s / n) * (s / n), trigamma3, 0.01);
}
