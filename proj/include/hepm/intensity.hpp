#pragma once

#include "hepm/event_core.hpp"
#include "hepm/forward_pass.hpp"
#include "hepm/hawkes_params.hpp"

namespace hepm {

/// lambda_{u,v}(t) by direct summation over tagged opposite-direction events strictly before t.
double intensity_at(const HawkesParams& params, const DirectedPairHistory& history, NodeId u,
                    NodeId v, double t, const CovariateMatrix* covs = nullptr);

/// Prior term of the stage-2 objective, up to additive constants:
///   sum_{k,k'} [e0 log alpha - f0 alpha]
/// + sum_{stored mu} [mu~ log mu - exp(-x^T beta) mu]
/// - 1/2 sum_{k,k'} sum_d beta_d^2 / nu_d
/// These are the shapes for which the closed-form EM updates are exact maximizers.
double log_prior(const HawkesParams& params, const CovariateMatrix* covs = nullptr);

struct LogPosteriorOptions {
    bool include_prior{true};
    const CovariateMatrix* covs{nullptr};
    bool parallel{true};
};

/// sum_i log lambda(t_i) - sum_{u != v} int_0^T lambda_{u,v} + log Pr(Theta).
///
/// With an assignment, histories are tagged by it (hard or soft). Without
/// one, tags are the forward responsibilities under `params` itself, which
/// makes the value a function of the parameters alone.
double log_posterior(const HawkesParams& params, const EventSequence& data,
                     const LatentAssignment* assignment = nullptr,
                     const LogPosteriorOptions& options = {});

/// Same as above with precomputed pair blocks.
double log_posterior(const HawkesParams& params, const EventSequence& data,
                     const PairBlocks& blocks, const LatentAssignment* assignment,
                     const LogPosteriorOptions& options);

/// sum_{u != v} int_0^T lambda_{u,v}(s) ds under the given tags.
double total_compensator(const HawkesParams& params, const EventSequence& data,
                         const LatentAssignment* assignment = nullptr,
                         const CovariateMatrix* covs = nullptr);

}  // namespace hepm
