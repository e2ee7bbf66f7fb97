#include "hepm/hawkes_model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>
#include <unordered_map>

#include "hepm/random.hpp"

namespace hepm {

Eigen::MatrixXd pattern_probabilities(const HawkesParams& params, const DirectedPairHistory& history,
                                      double t, NodeId u, NodeId v, const CovariateMatrix* covs) {
    if (u == v) throw DomainError("pattern probabilities of a self-pair");
    const int K = params.num_communities;
    std::vector<double> mu(static_cast<std::size_t>(K * K));
    pair_base_rates(params, covs, {u, v}, mu);
    Eigen::MatrixXd prob(K, K);
    for (int k = 0; k < K; ++k) {
        for (int kp = 0; kp < K; ++kp) {
            double sub = mu[static_cast<std::size_t>(pattern_index(k, kp, K))];
            auto past = K == 1 && !history.tagged() ? history.times({v, u})
                                                    : history.tagged_times({v, u}, pattern_index(kp, k, K));
            for (double tj : past) {
                if (!(tj < t)) break;
                sub += params.alpha(k, kp) * std::exp(-(t - tj) / params.delta);
            }
            prob(k, kp) = sub;
        }
    }
    const double lam = prob.sum();
    if (!(lam > 0.0) || !std::isfinite(lam))
        throw NumericalError("total intensity " + std::to_string(lam) + " at t=" + std::to_string(t) +
                             " for pair (" + std::to_string(u) + "," + std::to_string(v) + ")");
    return prob / lam;
}

namespace {

/// Fenwick tree over nonnegative slot weights with proportional sampling.
class Fenwick {
public:
    std::size_t add_slot() {
        tree_.push_back(0.0);
        raw_.push_back(0.0);
        const std::size_t i = raw_.size();  // 1-based position of the new slot
        // a fresh Fenwick node covers (i - lowbit(i), i]; rebuild its partial sum
        const std::size_t low = i & (~i + 1);
        double s = 0.0;
        for (std::size_t j = i - low + 1; j < i; ++j) s += raw_[j - 1];
        tree_[i - 1] = s;
        return i - 1;
    }
    void add(std::size_t slot, double w) {
        raw_[slot] += w;
        for (std::size_t i = slot + 1; i <= tree_.size(); i += i & (~i + 1)) tree_[i - 1] += w;
    }
    void scale(double f) {
        for (auto& x : tree_) x *= f;
        for (auto& x : raw_) x *= f;
    }
    double total() const {
        double s = 0.0;
        for (std::size_t i = tree_.size(); i > 0; i -= i & (~i + 1)) s += tree_[i - 1];
        return s;
    }
    /// Slot whose cumulative range contains u in [0, total).
    std::size_t find(double u) const {
        std::size_t pos = 0;
        std::size_t step = 1;
        while (step * 2 <= tree_.size()) step *= 2;
        for (; step > 0; step /= 2) {
            if (pos + step <= tree_.size() && tree_[pos + step - 1] <= u) {
                pos += step;
                u -= tree_[pos - 1];
            }
        }
        // guard against rounding past the last positive slot
        while (pos >= raw_.size() || raw_[pos] <= 0.0) {
            if (pos == 0) break;
            --pos;
        }
        return pos;
    }

private:
    std::vector<double> tree_;
    std::vector<double> raw_;
};

}  // namespace

Simulation simulate(const HawkesParams& params, const SimulationOptions& options,
                    const CovariateMatrix* covs) {
    params.validate();
    if (!(options.horizon > 0.0) || !std::isfinite(options.horizon))
        throw DomainError("simulation horizon must be positive and finite");
    const int V = params.num_nodes;
    const int K = params.num_communities;
    const auto P = static_cast<std::size_t>(params.patterns());
    const double delta = params.delta;
    const auto alpha = params.alpha_flat();

    Simulation sim;
    for (double a : alpha)
        if (a * delta >= 1.0) sim.stationary = false;
    if (!sim.stationary)
        std::cerr << "warning: some alpha * delta >= 1; simulating anyway with an event cap of "
                  << options.event_cap << "\n";

    // Base components: cumulative pair totals plus per-pair pattern rates.
    std::vector<NodePair> pairs;
    std::vector<double> pair_cum;
    std::vector<double> pair_rates;
    std::vector<double> buf(P);
    double base_total = 0.0;
    for (int u = 0; u < V; ++u) {
        for (int v = 0; v < V; ++v) {
            if (u == v) continue;
            pair_base_rates(params, covs, {u, v}, buf);
            double s = 0.0;
            for (double x : buf) s += x;
            if (!(s > 0.0)) continue;
            pairs.push_back({u, v});
            base_total += s;
            pair_cum.push_back(base_total);
            pair_rates.insert(pair_rates.end(), buf.begin(), buf.end());
        }
    }

    // Excitation slots keyed by (excited pair, pattern). Weights are stored
    // relative to time t0: current mass = weight * exp(-(t - t0) / delta).
    Fenwick slots;
    std::unordered_map<std::uint64_t, std::size_t> slot_of;
    std::vector<std::pair<NodePair, int>> slot_key;
    double t0 = 0.0;

    Rng rng = make_stream(options.seed, {0x51u});
    std::vector<Event> events;
    std::vector<std::uint8_t> exo_flags;
    std::vector<int> patterns;
    double t = 0.0;
    double horizon = options.horizon;

    for (;;) {
        const double excite = slots.total() * std::exp(-(t - t0) / delta);
        const double bound = base_total + excite;
        if (!(bound > 0.0)) break;
        t += -std::log1p(-uniform01(rng)) / bound;
        if (t > options.horizon) break;
        if ((t - t0) / delta > 500.0) {
            slots.scale(std::exp(-(t - t0) / delta));
            t0 = t;
        }
        const double decay = std::exp(-(t - t0) / delta);
        const double excite_now = slots.total() * decay;
        const double lam = base_total + excite_now;
        const double x = uniform01(rng) * bound;
        if (x >= lam) continue;

        NodePair pair;
        int q;
        bool exogenous;
        if (x < base_total) {
            exogenous = true;
            auto it = std::upper_bound(pair_cum.begin(), pair_cum.end(), x);
            if (it == pair_cum.end()) --it;
            const auto idx = static_cast<std::size_t>(it - pair_cum.begin());
            pair = pairs[idx];
            std::span<const double> rates{pair_rates.data() + idx * P, P};
            double s = 0.0;
            for (double r : rates) s += r;
            q = static_cast<int>(sample_categorical(rates, s, rng));
        } else {
            exogenous = false;
            const std::size_t slot = slots.find((x - base_total) / decay);
            pair = slot_key[slot].first;
            q = slot_key[slot].second;
        }
        events.push_back({t, pair.src, pair.dst});
        exo_flags.push_back(exogenous ? 1 : 0);
        patterns.push_back(q);

        const int rq = reverse_pattern(q, K);
        const double a = alpha[static_cast<std::size_t>(rq)];
        if (a > 0.0) {
            const NodePair excited = pair.reversed();
            const std::uint64_t key =
                (static_cast<std::uint64_t>(excited.src) * static_cast<std::uint64_t>(V) +
                 static_cast<std::uint64_t>(excited.dst)) * P + static_cast<std::uint64_t>(rq);
            auto [it, inserted] = slot_of.emplace(key, 0);
            if (inserted) {
                it->second = slots.add_slot();
                slot_key.emplace_back(excited, rq);
            }
            slots.add(it->second, a / decay);
        }

        if (events.size() >= options.event_cap)
            throw NumericalError("simulation exceeded the event cap of " + std::to_string(options.event_cap) +
                                 " events at t=" + std::to_string(t));
        if (options.max_events > 0 && events.size() >= options.max_events) {
            horizon = t;
            break;
        }
    }

    const std::size_t n = events.size();
    sim.truth = LatentAssignment::make_hard(n, static_cast<int>(P));
    sim.truth.exogenous = std::move(exo_flags);
    sim.truth.pattern = std::move(patterns);
    sim.events = EventSequence(std::move(events), horizon, V);
    return sim;
}

ScenarioTruth make_block_scenario(const BlockScenario& scenario) {
    const int K = static_cast<int>(scenario.alpha.size());
    if (K < 1) throw DomainError("scenario needs at least one block");
    if (scenario.num_nodes < 2) throw DomainError("scenario needs at least two nodes");
    if (!scenario.block_rates.empty() && static_cast<int>(scenario.block_rates.size()) != K)
        throw DomainError("block_rates must have one entry per block");
    Rng rng = make_stream(scenario.seed, {0x5ce7u});
    ScenarioTruth truth;
    truth.block.resize(static_cast<std::size_t>(scenario.num_nodes));
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(scenario.num_nodes, K);
    std::uniform_int_distribution<int> pick(0, K - 1);
    for (int u = 0; u < scenario.num_nodes; ++u) {
        const int b = pick(rng);
        truth.block[static_cast<std::size_t>(u)] = b;
        phi(u, b) = 1.0;
    }
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(K, K);
    for (int k = 0; k < K; ++k)
        omega(k, k) = scenario.block_rates.empty() ? uniform01(rng) : scenario.block_rates[static_cast<std::size_t>(k)];
    truth.params = make_hawkes_params(phi, omega, scenario.delta);
    for (int k = 0; k < K; ++k) truth.params.alpha(k, k) = scenario.alpha[static_cast<std::size_t>(k)];
    truth.params.validate();
    return truth;
}

}  // namespace hepm
