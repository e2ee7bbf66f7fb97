#pragma once

#include <cstdint>
#include <vector>

#include "hepm/em.hpp"
#include "hepm/event_core.hpp"
#include "hepm/forward_pass.hpp"
#include "hepm/hawkes_params.hpp"
#include "hepm/random.hpp"

namespace hepm {

struct GibbsState {
    HawkesParams params;
    /// Hard (b_i, pattern_i); the tagged histories are implied by it.
    LatentAssignment assignment;
    /// Active pairs x K^2 counts, aligned with PairBlocks::active_pairs().
    std::vector<double> m_hat;
    std::vector<double> m_check;
    std::vector<double> trigger_mass;
    RegressionState regression;
    std::uint64_t seed{0};
    std::uint64_t iteration{0};
};

/// alpha = 0.1, beta = 0, base rates at the fallback with exposure T, every event exogenous.
GibbsState init_gibbs(const HawkesParams& params0, const EventSequence& data, const PairBlocks& blocks,
                      const CovariateMatrix* covs, std::uint64_t seed);

/// One sweep of (b_i, z_i) in time order. Each event sees the tags already
/// drawn for earlier events of its pair: b_i ~ Bernoulli(mu / lambda), then
/// the pattern from the base or the excitation terms. Refreshes m_hat,
/// m_check and the trigger masses.
void sample_branching(GibbsState& state, const EventSequence& data, const PairBlocks& blocks,
                      const CovariateMatrix* covs, bool parallel = true);

/// alpha_p ~ Gamma(e0 + m_check_p, 1 / (f0 + trigger mass of p)).
void sample_alpha(GibbsState& state, Rng& rng);

/// mu ~ Gamma(mu~ + m_hat, 1 / (T + exp(-x^T beta))) on active pairs; exact 0 when the shape is 0.
void sample_mu(GibbsState& state, const PairBlocks& blocks, double horizon,
               const CovariateMatrix* covs, Rng& rng);

/// beta ~ N(tau Sigma X^T (psi - log T), Sigma), Sigma = (tau X^T X + A)^{-1}, per pattern.
/// No-op without covariates.
void sample_beta(GibbsState& state, const CovariateMatrix* covs, double horizon, Rng& rng);

/// omega ~ PG(mu~ + m_hat, psi), pi ~ logNormal(0, 1/tau),
/// psi ~ N(s [kappa + tau (x^T beta + log(T pi))], s) with s = 1/(omega + tau),
/// then sample_beta. No-op without covariates.
void sample_regression(GibbsState& state, const PairBlocks& blocks, const CovariateMatrix* covs,
                       double horizon, Rng& rng, int pg_terms = 10);

struct GibbsOptions {
    int iterations{1000};
    /// Iterations discarded before averaging; negative means half.
    int burn_in{-1};
    std::uint64_t seed{0};
    bool record_log_posterior{true};
    bool parallel{true};
};

struct ChainRecord {
    int iteration{0};
    double log_posterior{0.0};
    std::vector<double> alpha;  // row-major K x K
    double mean_stored_mu{0.0};
    double exogenous{0.0};
    double endogenous{0.0};
};

struct ChainResult {
    std::vector<ChainRecord> trace;
    /// Post-burn-in averages of alpha, stored mu and beta.
    HawkesParams posterior_mean;
    GibbsState final_state;
    int kept{0};
    double seconds{0.0};
};

ChainResult run_chain(const HawkesParams& params0, const EventSequence& data,
                      const CovariateMatrix* covs = nullptr, const GibbsOptions& options = {});

}  // namespace hepm
