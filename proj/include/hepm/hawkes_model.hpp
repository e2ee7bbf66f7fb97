#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hepm/event_core.hpp"
#include "hepm/hawkes_params.hpp"

namespace hepm {

/// Pr(z^s = k, z^d = k') for an event u -> v at time t, as a K x K matrix:
/// (mu_{u,k,k',v} + sum over (v -> u) events tagged (k', k) before t of alpha e^{-(t-t_j)/delta}) / lambda.
/// Throws NumericalError when the total intensity is zero.
Eigen::MatrixXd pattern_probabilities(const HawkesParams& params, const DirectedPairHistory& history,
                                      double t, NodeId u, NodeId v,
                                      const CovariateMatrix* covs = nullptr);

struct SimulationOptions {
    double horizon{1.0};
    std::uint64_t seed{0};
    /// Abort (NumericalError) once this many events have been generated.
    std::size_t event_cap{10'000'000};
    /// Stop early after this many events; the horizon then becomes the last event time. 0 = off.
    std::size_t max_events{0};
};

struct Simulation {
    EventSequence events;
    /// Ground truth (b_i, pattern_i), hard mode.
    LatentAssignment truth;
    /// False when some alpha_{k,k'} delta >= 1.
    bool stationary{true};
};

/// Exact Ogata thinning of the pattern-factorized intensity.
///
/// All kernels share delta, so the total excitation decays by a single factor
/// between events and the intensity right after an event bounds it until the
/// next candidate. Exogenous events pick (pair, pattern) from the base rates;
/// endogenous ones pick an excitation slot proportionally to its mass, which
/// is the composition of Pr(b_i) with the pattern probabilities above.
Simulation simulate(const HawkesParams& params, const SimulationOptions& options,
                    const CovariateMatrix* covs = nullptr);

/// Block-structured scenario: nodes uniformly assigned to K blocks, phi one-hot,
/// Omega = diag(mu_k), alpha = diag(alpha_k).
struct BlockScenario {
    int num_nodes{100};
    std::vector<double> alpha{0.5, 0.88, 1.38, 1.96};
    double delta{0.45};
    /// Per-block base rates; drawn from Uniform[0, 1] when empty.
    std::vector<double> block_rates;
    std::uint64_t seed{0};
};

struct ScenarioTruth {
    HawkesParams params;
    std::vector<int> block;  // block of each node
};

ScenarioTruth make_block_scenario(const BlockScenario& scenario);

}  // namespace hepm
