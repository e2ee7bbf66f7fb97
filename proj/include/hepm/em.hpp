#pragma once

#include <vector>

#include "hepm/event_core.hpp"
#include "hepm/forward_pass.hpp"
#include "hepm/hawkes_params.hpp"

namespace hepm {

/// Per (pair, pattern) auxiliaries of the covariate regression. Pairs are the
/// active pairs plus every pair with a covariate row, sorted.
struct RegressionState {
    std::vector<NodePair> pairs;
    std::vector<double> psi;    // pairs x K^2
    std::vector<double> omega;  // E[omega] (EM) or a draw (Gibbs)
    std::vector<double> pi;     // per pair, Gibbs only

    std::size_t size() const { return pairs.size(); }
};

RegressionState make_regression_state(const PairBlocks& blocks, const CovariateMatrix* covs,
                                      int num_patterns, double horizon);

/// Design matrix with one row per regression pair (zeros where a pair has no covariates).
Eigen::MatrixXd design_matrix(const RegressionState& reg, const CovariateMatrix& covs);

struct EMState {
    HawkesParams params;
    LatentAssignment responsibilities;
    /// Active pairs x K^2, aligned with PairBlocks::active_pairs().
    std::vector<double> m_hat;
    std::vector<double> m_check;
    std::vector<double> trigger_mass;
    RegressionState regression;
    std::vector<double> objective_trace;
    std::vector<double> regression_trace;
};

/// Starting point: alpha = 0.1, beta = 0, psi = log T, base rates from the
/// factorized fallback with exposure T.
EMState init_em(const HawkesParams& params0, const EventSequence& data, const PairBlocks& blocks,
                const CovariateMatrix* covs);

/// Responsibilities and sufficient statistics under the current parameters.
void e_step(EMState& state, const EventSequence& data, const PairBlocks& blocks,
            const CovariateMatrix* covs, bool parallel = true);

/// mu = (mu~ + m_hat) / (T + exp(-x^T beta)) on active pairs; other pairs use the
/// fallback with exposure T, which is the same expression with m_hat = 0.
void m_step_mu(EMState& state, const PairBlocks& blocks, double horizon, const CovariateMatrix* covs);

/// alpha = (e0 + sum m_check) / (f0 + sum_j w_j(rev p) delta (1 - exp(-(T - t_j)/delta))).
void m_step_alpha(EMState& state);

/// beta from the ridge system on the current psi, E[omega] from PG(mu~ + m_hat, psi),
/// then psi = (kappa + tau (x^T beta + log T)) / (E[omega] + tau). No-op without covariates.
void m_step_regression(EMState& state, const PairBlocks& blocks, const CovariateMatrix* covs,
                       double horizon);

/// PG-augmented regression objective maximized by m_step_regression for fixed E[omega].
double regression_objective(const EMState& state, const PairBlocks& blocks,
                            const CovariateMatrix* covs, double horizon);

struct EMOptions {
    int max_iter{500};
    /// Stop when |change| < tol * |objective|.
    double tol{1e-6};
    bool parallel{true};
};

struct EMFit {
    HawkesParams params;
    EMState state;
    int iterations{0};
    bool converged{false};
    double seconds{0.0};
};

/// Algorithm: E-step, mu, regression, alpha; objective_trace[l] is the
/// log-posterior at the l-th iterate (entry 0 at the starting point).
/// Throws NumericalError naming the iteration when the objective is not finite.
EMFit fit_em(const HawkesParams& params0, const EventSequence& data,
             const CovariateMatrix* covs = nullptr, const EMOptions& options = {});

}  // namespace hepm
