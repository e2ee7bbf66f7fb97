#include <gtest/gtest.h>

#include <cmath>

#include "hepm/forward_pass.hpp"
#include "hepm/hawkes_model.hpp"
#include "hepm/intensity.hpp"
#include "support.hpp"

using namespace hepm;
using gen::rel_diff;

namespace {

HawkesParams two_node_params(double mu, double alpha, double delta) {
    Eigen::MatrixXd phi = Eigen::MatrixXd::Ones(2, 1);
    Eigen::MatrixXd omega = Eigen::MatrixXd::Ones(1, 1);
    auto p = make_hawkes_params(phi, omega, delta);
    p.alpha(0, 0) = alpha;
    p.mu.assign({{{0, 1}, {mu}}, {{1, 0}, {mu}}});
    return p;
}

/// log-likelihood of hard-tagged data by direct summation over all earlier events.
double naive_log_likelihood(const HawkesParams& p, const EventSequence& data, const LatentAssignment& tags,
                            const CovariateMatrix* covs) {
    const int K = p.num_communities;
    const int P = K * K;
    const auto alpha = p.alpha_flat();
    double ll = 0.0;
    std::vector<double> mu(static_cast<std::size_t>(P));
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& e = data[i];
        pair_base_rates(p, covs, {e.src, e.dst}, mu);
        double lam = 0.0;
        for (double m : mu) lam += m;
        for (std::size_t j = 0; j < i; ++j) {
            const auto& f = data[j];
            if (f.src != e.dst || f.dst != e.src || !(f.t < e.t)) continue;
            lam += alpha[static_cast<std::size_t>(reverse_pattern(tags.pattern[j], K))] * std::exp(-(e.t - f.t) / p.delta);
        }
        ll += std::log(lam);
    }
    double comp = total_base_rate(p, covs) * data.horizon();
    for (std::size_t j = 0; j < data.size(); ++j)
        comp += alpha[static_cast<std::size_t>(reverse_pattern(tags.pattern[j], K))] * p.delta *
                -std::expm1(-(data.horizon() - data[j].t) / p.delta);
    return ll - comp;
}

}  // namespace

TEST(Intensity, SingleExcitationOracle) {
    auto p = two_node_params(0.5, 0.5, 1.0);
    EventSequence data({{0.0, 1, 0}}, 2.0, 2);
    std::vector<int> tags{0};
    DirectedPairHistory h(data, 1, tags);
    EXPECT_NEAR(intensity_at(p, h, 0, 1, 1.0), 0.6839397, 1e-7);
    // strict past: an event does not excite at its own timestamp
    EXPECT_DOUBLE_EQ(intensity_at(p, h, 0, 1, 0.0), 0.5);
    // excitation runs only in the reverse direction
    EXPECT_DOUBLE_EQ(intensity_at(p, h, 1, 0, 1.0), 0.5);
}

TEST(Intensity, FallbackBaseRateWithCovariates) {
    Eigen::MatrixXd phi(2, 1);
    phi << 1.0, 0.2;
    auto p = make_hawkes_params(phi, Eigen::MatrixXd::Ones(1, 1), 1.0, 1);
    p.beta(0, 0) = std::log(3.0);
    CovariateMatrix covs(1);
    covs.set({0, 1}, {1.0});
    EXPECT_NEAR(base_rate(p, &covs, 0, 1, 0, 0), 0.6, 1e-15);
    // no covariates: prior mean
    EXPECT_NEAR(base_rate(p, &covs, 1, 0, 0, 0), 0.2, 1e-15);
    p.exposure = 4.0;
    EXPECT_NEAR(base_rate(p, &covs, 0, 1, 0, 0), 0.2 / (4.0 + 1.0 / 3.0), 1e-15);
}

TEST(Intensity, TotalBaseRateSumsAllPairs) {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const int V = 3 + static_cast<int>(rng() % 4);
        const int K = 1 + static_cast<int>(rng() % 3);
        auto p = gen::random_params(rng, V, K, 2);
        auto covs = gen::random_covs(rng, V, 2);
        double direct = 0.0;
        std::vector<double> mu(static_cast<std::size_t>(K * K));
        for (int u = 0; u < V; ++u)
            for (int v = 0; v < V; ++v) {
                if (u == v) continue;
                pair_base_rates(p, &covs, {u, v}, mu);
                for (double m : mu) direct += m;
            }
        EXPECT_LT(rel_diff(total_base_rate(p, &covs), direct), 1e-12);
    }
}

TEST(Intensity, LogLikelihoodMatchesNaiveSummation) {
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const int V = 3 + static_cast<int>(rng() % 4);
        const int K = 1 + static_cast<int>(rng() % 3);
        auto p = gen::random_params(rng, V, K, rep % 2 ? 2 : 0);
        auto covs = gen::random_covs(rng, V, 2);
        const CovariateMatrix* cv = rep % 2 ? &covs : nullptr;
        auto data = gen::reciprocal_events(rng, V, 4, 150, 20.0);
        auto tags = gen::random_tags(rng, data.size(), K * K);
        LogPosteriorOptions o;
        o.include_prior = false;
        o.covs = cv;
        EXPECT_LT(rel_diff(log_posterior(p, data, &tags, o), naive_log_likelihood(p, data, tags, cv)), 1e-10);
    }
}

TEST(Intensity, TiedTimestampsDoNotExcite) {
    auto p = two_node_params(0.3, 2.0, 1.0);
    EventSequence tied({{1.0, 0, 1}, {1.0, 1, 0}}, 2.0, 2);
    auto tags = LatentAssignment::make_hard(2, 1);
    LogPosteriorOptions o;
    o.include_prior = false;
    const double expected = 2.0 * std::log(0.3) - 2.0 * 0.3 * 2.0 - 2.0 * 2.0 * 1.0 * -std::expm1(-1.0);
    EXPECT_NEAR(log_posterior(p, tied, &tags, o), expected, 1e-12);
}

TEST(ForwardPass, RecursiveMatchesReference) {
    Rng rng(9);
    for (int rep = 0; rep < 15; ++rep) {
        const int V = 3 + static_cast<int>(rng() % 4);
        const int K = 1 + static_cast<int>(rng() % 3);
        auto p = gen::random_params(rng, V, K);
        auto data = gen::reciprocal_events(rng, V, 5, 300, 30.0);
        PairBlocks blocks(data);
        for (auto mode : {TagMode::soft, TagMode::fixed}) {
            auto tags = gen::random_tags(rng, data.size(), K * K);
            PassOptions o;
            o.mode = mode;
            o.fixed = &tags;
            o.event_intensity = true;
            o.horizon_state = true;
            auto a = forward_pass(p, data, blocks, o);
            auto b = forward_pass_reference(p, data, blocks, o);
            EXPECT_LT(rel_diff(a.log_intensity, b.log_intensity), 1e-10);
            EXPECT_LT(rel_diff(a.excitation_mass, b.excitation_mass), 1e-10);
            ASSERT_EQ(a.event_intensity.size(), b.event_intensity.size());
            for (std::size_t i = 0; i < a.event_intensity.size(); ++i)
                EXPECT_LT(rel_diff(a.event_intensity[i], b.event_intensity[i]), 1e-10);
            ASSERT_EQ(a.m_hat.size(), b.m_hat.size());
            for (std::size_t i = 0; i < a.m_hat.size(); ++i) {
                EXPECT_NEAR(a.m_hat[i], b.m_hat[i], 1e-9);
                EXPECT_NEAR(a.m_check[i], b.m_check[i], 1e-9);
            }
            for (std::size_t q = 0; q < a.trigger_mass.size(); ++q)
                EXPECT_LT(rel_diff(a.trigger_mass[q], b.trigger_mass[q]), 1e-10);
            ASSERT_EQ(a.horizon_state.size(), b.horizon_state.size());
            for (const auto& [pair, s] : a.horizon_state)
                for (std::size_t q = 0; q < s.size(); ++q) EXPECT_NEAR(s[q], b.horizon_state.at(pair)[q], 1e-10);
        }
    }
}

TEST(ForwardPass, ParallelAndSerialAreIdentical) {
    Rng rng(13);
    auto p = gen::random_params(rng, 8, 3);
    auto data = gen::random_events(rng, 8, 3000, 100.0, 0.05);
    PairBlocks blocks(data);
    PassOptions o;
    auto a = forward_pass(p, data, blocks, o);
    o.parallel = false;
    auto b = forward_pass(p, data, blocks, o);
    EXPECT_EQ(a.log_intensity, b.log_intensity);
    EXPECT_EQ(a.excitation_mass, b.excitation_mass);
    EXPECT_EQ(a.m_hat, b.m_hat);
    EXPECT_EQ(a.m_check, b.m_check);
    EXPECT_EQ(a.trigger_mass, b.trigger_mass);
}

TEST(ForwardPass, SoftResponsibilitiesSumToOne) {
    Rng rng(17);
    auto p = gen::random_params(rng, 5, 2);
    auto data = gen::reciprocal_events(rng, 5, 3, 400, 40.0);
    PairBlocks blocks(data);
    auto rec = LatentAssignment::make_soft(data.size(), 4);
    PassOptions o;
    o.record = &rec;
    auto r = forward_pass(p, data, blocks, o);
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double s = 0.0;
        for (double x : rec.exo(i)) s += x;
        for (double x : rec.endo(i)) s += x;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
    for (std::size_t i = 0; i < r.m_hat.size(); ++i) total += r.m_hat[i] + r.m_check[i];
    EXPECT_NEAR(total, static_cast<double>(data.size()), 1e-9);
}

TEST(PatternProbabilities, MatchDirectArithmetic) {
    Rng rng(19);
    for (int rep = 0; rep < 50; ++rep) {
        auto p = gen::random_params(rng, 3, 2, 0, 1.0);
        auto data = gen::reciprocal_events(rng, 3, 2, 30, 5.0);
        auto tags = gen::random_tags(rng, data.size(), 4);
        DirectedPairHistory h(data, 2, tags.pattern);
        const auto u = static_cast<NodeId>(rng() % 3);
        const auto v = static_cast<NodeId>((u + 1 + rng() % 2) % 3);
        const double t = 5.0 * uniform01(rng);
        auto probs = pattern_probabilities(p, h, t, u, v);
        // direct: mu_{u,k,k',v} + sum over (v -> u) events tagged (k', k)
        double w[2][2];
        double total = 0.0;
        for (int k = 0; k < 2; ++k) {
            for (int kp = 0; kp < 2; ++kp) {
                double x = base_rate(p, nullptr, u, v, k, kp);
                for (std::size_t j = 0; j < data.size(); ++j) {
                    const auto& e = data[j];
                    if (e.src == v && e.dst == u && e.t < t && tags.pattern[j] == kp * 2 + k)
                        x += p.alpha(k, kp) * std::exp(-(t - e.t) / p.delta);
                }
                w[k][kp] = x;
                total += x;
            }
        }
        for (int k = 0; k < 2; ++k)
            for (int kp = 0; kp < 2; ++kp) EXPECT_NEAR(probs(k, kp), w[k][kp] / total, 1e-12);
        EXPECT_NEAR(probs.sum(), 1.0, 1e-12);
    }
}

TEST(PatternProbabilities, ZeroIntensityIsNumericalError) {
    auto p = two_node_params(0.0, 0.0, 1.0);
    EventSequence data({{0.5, 0, 1}}, 1.0, 2);
    DirectedPairHistory h(data, 1, std::vector<int>{0});
    EXPECT_THROW(pattern_probabilities(p, h, 0.7, 0, 1), NumericalError);
    EXPECT_THROW(pattern_probabilities(p, h, 0.7, 1, 1), DomainError);
}
