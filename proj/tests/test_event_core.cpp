#include <gtest/gtest.h>

#include <cmath>

#include "hepm/event_core.hpp"
#include "support.hpp"

using namespace hepm;

TEST(Kernel, ValueAndCompensator) {
    const ExpKernel k(0.5, 1.0);
    EXPECT_NEAR(kernel_value(k, 1.0), 0.1839397, 1e-7);
    EXPECT_DOUBLE_EQ(kernel_value(k, 0.0), 0.5);
    // integral of e^{-s} over [0, 1]
    EXPECT_NEAR(kernel_compensator(ExpKernel(1.0, 1.0), 0.0, 0.0, 1.0), 1.0 - std::exp(-1.0), 1e-15);
    // interval starting before the trigger only counts from t_j
    EXPECT_DOUBLE_EQ(kernel_compensator(k, 2.0, 0.0, 3.0), kernel_compensator(k, 2.0, 2.0, 3.0));
    EXPECT_DOUBLE_EQ(kernel_compensator(k, 5.0, 0.0, 3.0), 0.0);
    EXPECT_THROW(kernel_value(k, -1e-9), DomainError);
    EXPECT_THROW(ExpKernel(1.0, 0.0), DomainError);
    EXPECT_THROW(ExpKernel(-0.1, 1.0), DomainError);
}

TEST(Kernel, CompensatorIsAdditiveOverIntervals) {
    Rng rng(7);
    for (int rep = 0; rep < 100; ++rep) {
        const ExpKernel k(2.0 * uniform01(rng), 0.1 + 3.0 * uniform01(rng));
        const double tj = 5.0 * uniform01(rng);
        const double a = tj + 2.0 * uniform01(rng);
        const double b = a + 2.0 * uniform01(rng);
        const double c = b + 2.0 * uniform01(rng);
        EXPECT_NEAR(kernel_compensator(k, tj, tj, c),
                    kernel_compensator(k, tj, tj, a) + kernel_compensator(k, tj, a, b) + kernel_compensator(k, tj, b, c),
                    1e-12);
    }
}

TEST(Kernel, Stationarity) {
    EXPECT_TRUE(ExpKernel(1.0, 0.99).stationary());
    EXPECT_FALSE(ExpKernel(2.0, 0.5).stationary());
}

TEST(EventSequence, SortsStablyByTime) {
    EventSequence s({{2.0, 0, 1}, {1.0, 1, 2}, {2.0, 2, 0}, {1.0, 0, 2}}, 3.0, 3);
    ASSERT_EQ(s.size(), 4u);
    EXPECT_EQ(s[0].src, 1);
    EXPECT_EQ(s[1].src, 0);
    EXPECT_EQ(s[2].src, 0);
    EXPECT_EQ(s[3].src, 2);
}

TEST(EventSequence, RejectsInvalidEvents) {
    EXPECT_THROW(EventSequence({{1.0, 1, 1}}, 2.0, 2), DomainError);
    EXPECT_THROW(EventSequence({{1.0, 0, 2}}, 2.0, 2), DomainError);
    EXPECT_THROW(EventSequence({{-0.5, 0, 1}}, 2.0, 2), DomainError);
    EXPECT_THROW(EventSequence({{2.5, 0, 1}}, 2.0, 2), DomainError);
    EXPECT_THROW(EventSequence({}, 0.0, 2), DomainError);
    EXPECT_NO_THROW(EventSequence({{2.0, 0, 1}}, 2.0, 2));
}

TEST(EventSequence, Prefix) {
    EventSequence s({{0.5, 0, 1}, {1.0, 1, 0}, {1.5, 0, 1}}, 2.0, 2);
    auto p = s.prefix(2, 1.2);
    EXPECT_EQ(p.size(), 2u);
    EXPECT_DOUBLE_EQ(p.horizon(), 1.2);
    EXPECT_EQ(p.node_count(), 2);
}

TEST(PairHistory, TaggedTimesPartitionEachPair) {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const int K = 1 + static_cast<int>(rng() % 3);
        auto data = gen::random_events(rng, 6, 200, 10.0, 0.1);
        std::vector<int> tags(data.size());
        for (auto& t : tags) t = static_cast<int>(rng() % static_cast<std::uint64_t>(K * K));
        DirectedPairHistory h(data, K, tags);
        ASSERT_TRUE(h.tagged());
        std::size_t total = 0;
        for (const auto& [pair, times] : h.pairs()) {
            std::vector<double> merged;
            for (int p = 0; p < K * K; ++p) {
                auto tt = h.tagged_times(pair, p);
                EXPECT_TRUE(std::is_sorted(tt.begin(), tt.end()));
                merged.insert(merged.end(), tt.begin(), tt.end());
            }
            std::sort(merged.begin(), merged.end());
            EXPECT_EQ(merged, times);
            total += times.size();
        }
        EXPECT_EQ(total, data.size());
    }
}

TEST(PairHistory, UntaggedHistoryRefusesPatternQueries) {
    EventSequence s({{0.5, 0, 1}}, 1.0, 2);
    DirectedPairHistory h(s, 2);
    EXPECT_EQ(h.times({0, 1}).size(), 1u);
    EXPECT_TRUE(h.times({1, 0}).empty());
    EXPECT_THROW(h.tagged_times({0, 1}, 0), DomainError);
}
