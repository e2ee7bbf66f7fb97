#include "hepm/intensity.hpp"

#include <cmath>
#include <limits>

namespace hepm {

double intensity_at(const HawkesParams& params, const DirectedPairHistory& history, NodeId u,
                    NodeId v, double t, const CovariateMatrix* covs) {
    if (u == v) throw DomainError("intensity of a self-pair");
    const int K = params.num_communities;
    const int P = K * K;
    std::vector<double> mu(static_cast<std::size_t>(P));
    pair_base_rates(params, covs, {u, v}, mu);
    double lam = 0.0;
    for (int k = 0; k < K; ++k) {
        for (int kp = 0; kp < K; ++kp) {
            const int p = pattern_index(k, kp, K);
            double sub = mu[static_cast<std::size_t>(p)];
            // lambda_{u,k,k',v} is excited by (v -> u) events tagged (k', k)
            for (double tj : history.tagged_times({v, u}, pattern_index(kp, k, K))) {
                if (!(tj < t)) break;
                sub += params.alpha(k, kp) * std::exp(-(t - tj) / params.delta);
            }
            lam += sub;
        }
    }
    return lam;
}

double log_prior(const HawkesParams& params, const CovariateMatrix* covs) {
    auto xlogy = [](double x, double y) {
        if (x == 0.0) return 0.0;
        if (y < 0.0) return -std::numeric_limits<double>::infinity();
        // a rate that underflowed to zero is read as the smallest subnormal
        if (y == 0.0) y = std::numeric_limits<double>::denorm_min();
        return x * std::log(y);
    };
    const int K = params.num_communities;
    double lp = 0.0;
    for (int k = 0; k < K; ++k)
        for (int kp = 0; kp < K; ++kp)
            lp += xlogy(params.alpha_shape, params.alpha(k, kp)) - params.alpha_rate * params.alpha(k, kp);

    const auto D = params.covariate_dim();
    std::vector<double> beta_row(static_cast<std::size_t>(D));
    for (std::size_t i = 0; i < params.mu.size(); ++i) {
        const NodePair pair = params.mu.pairs()[i];
        auto vals = params.mu.values(i);
        for (int k = 0; k < K; ++k) {
            for (int kp = 0; kp < K; ++kp) {
                const int p = pattern_index(k, kp, K);
                double xb = 0.0;
                if (covs && D > 0) {
                    for (Eigen::Index d = 0; d < D; ++d) beta_row[static_cast<std::size_t>(d)] = params.beta(p, d);
                    xb = covs->dot(pair, beta_row);
                }
                const double m = vals[static_cast<std::size_t>(p)];
                lp += xlogy(params.prior_mean(pair.src, k, kp, pair.dst), m) - std::exp(-xb) * m;
            }
        }
    }
    for (Eigen::Index p = 0; p < params.beta.rows(); ++p)
        for (Eigen::Index d = 0; d < D; ++d) lp -= 0.5 * params.beta(p, d) * params.beta(p, d) / params.nu(d);
    return lp;
}

double log_posterior(const HawkesParams& params, const EventSequence& data,
                     const PairBlocks& blocks, const LatentAssignment* assignment,
                     const LogPosteriorOptions& options) {
    PassOptions po;
    po.mode = assignment ? TagMode::fixed : TagMode::soft;
    po.fixed = assignment;
    po.covs = options.covs;
    po.pair_stats = false;
    po.parallel = options.parallel;
    const auto pass = forward_pass(params, data, blocks, po);
    double value = pass.log_intensity - total_base_rate(params, options.covs) * data.horizon() -
                   pass.excitation_mass;
    if (options.include_prior) value += log_prior(params, options.covs);
    return value;
}

double log_posterior(const HawkesParams& params, const EventSequence& data,
                     const LatentAssignment* assignment, const LogPosteriorOptions& options) {
    return log_posterior(params, data, PairBlocks(data), assignment, options);
}

double total_compensator(const HawkesParams& params, const EventSequence& data,
                         const LatentAssignment* assignment, const CovariateMatrix* covs) {
    PassOptions po;
    po.mode = assignment ? TagMode::fixed : TagMode::soft;
    po.fixed = assignment;
    po.covs = covs;
    po.pair_stats = false;
    const auto pass = forward_pass(params, data, PairBlocks(data), po);
    return total_base_rate(params, covs) * data.horizon() + pass.excitation_mass;
}

}  // namespace hepm
