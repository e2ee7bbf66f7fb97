#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "hepm/event_core.hpp"
#include "hepm/hawkes_params.hpp"
#include "hepm/random.hpp"

namespace hepm::gen {

/// N events on V nodes over [0, T]; about `tie_share` of them reuse the previous timestamp.
inline EventSequence random_events(Rng& rng, int V, std::size_t N, double T, double tie_share = 0.0) {
    std::vector<Event> ev;
    double last = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const auto u = static_cast<NodeId>(rng() % static_cast<std::uint64_t>(V));
        auto v = static_cast<NodeId>(rng() % static_cast<std::uint64_t>(V - 1));
        if (v >= u) ++v;
        const double t = (!ev.empty() && uniform01(rng) < tie_share) ? last : T * uniform01(rng);
        ev.push_back({t, u, v});
        last = t;
    }
    return EventSequence(std::move(ev), T, V);
}

/// Events concentrated on a few reciprocal pairs, so that excitation matters.
inline EventSequence reciprocal_events(Rng& rng, int V, int pairs, std::size_t N, double T) {
    std::vector<std::pair<NodeId, NodeId>> chosen;
    for (int i = 0; i < pairs; ++i) {
        const auto u = static_cast<NodeId>(rng() % static_cast<std::uint64_t>(V));
        auto v = static_cast<NodeId>(rng() % static_cast<std::uint64_t>(V - 1));
        if (v >= u) ++v;
        chosen.emplace_back(u, v);
    }
    std::vector<Event> ev;
    for (std::size_t i = 0; i < N; ++i) {
        auto [u, v] = chosen[rng() % chosen.size()];
        if (rng() % 2) std::swap(u, v);
        ev.push_back({T * uniform01(rng), u, v});
    }
    return EventSequence(std::move(ev), T, V);
}

/// Random parameters with stored rates on a random subset of pairs.
inline HawkesParams random_params(Rng& rng, int V, int K, int D = 0, double alpha_scale = 0.5,
                                  double delta = 0.7) {
    Eigen::MatrixXd phi(V, K);
    for (int u = 0; u < V; ++u)
        for (int k = 0; k < K; ++k) phi(u, k) = 0.1 + uniform01(rng);
    Eigen::MatrixXd omega(K, K);
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) omega(a, b) = 0.05 + 0.2 * uniform01(rng);
    auto p = make_hawkes_params(phi, omega, delta, D);
    for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b) p.alpha(a, b) = alpha_scale * uniform01(rng);
    for (int r = 0; r < K * K; ++r)
        for (int d = 0; d < D; ++d) p.beta(r, d) = sample_normal(0.0, 0.3, rng);
    p.exposure = uniform01(rng) < 0.5 ? 0.0 : 3.0;
    std::map<NodePair, std::vector<double>> stored;
    for (int u = 0; u < V; ++u) {
        for (int v = 0; v < V; ++v) {
            if (u == v || uniform01(rng) < 0.7) continue;
            std::vector<double> vals(static_cast<std::size_t>(K * K));
            for (auto& x : vals) x = 0.02 + 0.1 * uniform01(rng);
            stored.emplace(NodePair{u, v}, std::move(vals));
        }
    }
    p.mu.assign(std::move(stored));
    p.validate();
    return p;
}

inline CovariateMatrix random_covs(Rng& rng, int V, int D, double density = 0.5) {
    CovariateMatrix covs(D);
    for (int u = 0; u < V; ++u) {
        for (int v = 0; v < V; ++v) {
            if (u == v || uniform01(rng) > density) continue;
            std::vector<double> x(static_cast<std::size_t>(D));
            for (auto& e : x) e = sample_normal(0.0, 1.0, rng);
            covs.set({u, v}, std::move(x));
        }
    }
    return covs;
}

/// Random hard tags; about `exo_share` exogenous.
inline LatentAssignment random_tags(Rng& rng, std::size_t n, int P, double exo_share = 0.5) {
    auto a = LatentAssignment::make_hard(n, P);
    for (std::size_t i = 0; i < n; ++i) {
        a.exogenous[i] = uniform01(rng) < exo_share;
        a.pattern[i] = static_cast<int>(rng() % static_cast<std::uint64_t>(P));
    }
    return a;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace hepm::gen
