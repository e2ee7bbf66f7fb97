#include "hepm/gibbs.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <string>

#include "hepm/intensity.hpp"
#include "hepm/polya_gamma.hpp"

namespace hepm {

GibbsState init_gibbs(const HawkesParams& params0, const EventSequence& data, const PairBlocks& blocks,
                      const CovariateMatrix* covs, std::uint64_t seed) {
    auto em = init_em(params0, data, blocks, covs);
    GibbsState s;
    s.params = std::move(em.params);
    s.regression = std::move(em.regression);
    s.assignment = LatentAssignment::make_hard(data.size(), s.params.patterns());
    s.seed = seed;
    return s;
}

void sample_branching(GibbsState& state, const EventSequence& data, const PairBlocks& blocks,
                      const CovariateMatrix* covs, bool parallel) {
    PassOptions po;
    po.mode = TagMode::sample;
    po.record = &state.assignment;
    po.covs = covs;
    po.seed = state.seed;
    po.iteration = state.iteration;
    po.parallel = parallel;
    auto pass = forward_pass(state.params, data, blocks, po);
    state.m_hat = std::move(pass.m_hat);
    state.m_check = std::move(pass.m_check);
    state.trigger_mass = std::move(pass.trigger_mass);
}

void sample_alpha(GibbsState& state, Rng& rng) {
    auto& params = state.params;
    const int K = params.num_communities;
    const auto P = static_cast<std::size_t>(params.patterns());
    std::vector<double> endo(P, 0.0);
    for (std::size_t i = 0; i < state.m_check.size(); ++i) endo[i % P] += state.m_check[i];
    for (int k = 0; k < K; ++k) {
        for (int kp = 0; kp < K; ++kp) {
            const auto p = static_cast<std::size_t>(pattern_index(k, kp, K));
            const double mass = state.trigger_mass.empty() ? 0.0 : state.trigger_mass[p];
            params.alpha(k, kp) = sample_gamma(params.alpha_shape + endo[p], 1.0 / (params.alpha_rate + mass), rng);
        }
    }
}

void sample_mu(GibbsState& state, const PairBlocks& blocks, double horizon, const CovariateMatrix* covs,
               Rng& rng) {
    auto& params = state.params;
    const int K = params.num_communities;
    const auto P = static_cast<std::size_t>(params.patterns());
    const int D = covs ? params.covariate_dim() : 0;
    params.exposure = horizon;
    std::map<NodePair, std::vector<double>> entries;
    const auto& active = blocks.active_pairs();
    for (std::size_t a = 0; a < active.size(); ++a) {
        const NodePair pair = active[a];
        auto x = D > 0 ? covs->get(pair) : std::span<const double>{};
        std::vector<double> v(P);
        for (int k = 0; k < K; ++k) {
            for (int kp = 0; kp < K; ++kp) {
                const int p = pattern_index(k, kp, K);
                double xb = 0.0;
                for (std::size_t d = 0; d < x.size(); ++d) xb += x[d] * params.beta(p, static_cast<Eigen::Index>(d));
                const double shape = params.prior_mean(pair.src, k, kp, pair.dst) + state.m_hat[a * P + static_cast<std::size_t>(p)];
                v[static_cast<std::size_t>(p)] = sample_gamma(shape, 1.0 / (horizon + std::exp(-xb)), rng);
            }
        }
        entries.emplace(pair, std::move(v));
    }
    params.mu.assign(std::move(entries));
}

void sample_beta(GibbsState& state, const CovariateMatrix* covs, double horizon, Rng& rng) {
    auto& params = state.params;
    const int D = params.covariate_dim();
    if (!covs || D == 0) return;
    const auto P = static_cast<std::size_t>(params.patterns());
    const auto& reg = state.regression;
    const Eigen::MatrixXd X = design_matrix(reg, *covs);
    const double logT = std::log(horizon);
    const double tau = params.tau;
    const auto R = static_cast<Eigen::Index>(reg.size());

    Eigen::MatrixXd prec = tau * X.transpose() * X;
    for (Eigen::Index d = 0; d < D; ++d) prec(d, d) += 1.0 / params.nu(d);
    const Eigen::LLT<Eigen::MatrixXd> llt(prec);
    if (llt.info() != Eigen::Success) throw NumericalError("beta posterior precision is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    for (std::size_t p = 0; p < P; ++p) {
        Eigen::VectorXd target(R);
        for (Eigen::Index r = 0; r < R; ++r) target(r) = reg.psi[static_cast<std::size_t>(r) * P + p] - logT;
        const Eigen::VectorXd mean = llt.solve(tau * (X.transpose() * target));
        Eigen::VectorXd z(D);
        for (Eigen::Index d = 0; d < D; ++d) z(d) = sample_normal(0.0, 1.0, rng);
        // L L^T = prec, so L^{-T} z has covariance prec^{-1}
        const Eigen::VectorXd noise = L.transpose().triangularView<Eigen::Upper>().solve(z);
        params.beta.row(static_cast<Eigen::Index>(p)) = (mean + noise).transpose();
    }
}

void sample_regression(GibbsState& state, const PairBlocks& blocks, const CovariateMatrix* covs,
                       double horizon, Rng& rng, int pg_terms) {
    auto& params = state.params;
    const int D = params.covariate_dim();
    if (!covs || D == 0) return;
    const int K = params.num_communities;
    const auto P = static_cast<std::size_t>(params.patterns());
    auto& reg = state.regression;
    const Eigen::MatrixXd X = design_matrix(reg, *covs);
    const double logT = std::log(horizon);
    const double tau = params.tau;
    const auto R = static_cast<Eigen::Index>(reg.size());

    for (auto& pi : reg.pi) pi = std::exp(sample_normal(0.0, 1.0 / std::sqrt(tau), rng));

    for (int k = 0; k < K; ++k) {
        for (int kp = 0; kp < K; ++kp) {
            const int p = pattern_index(k, kp, K);
            const auto up = static_cast<std::size_t>(p);
            for (Eigen::Index r = 0; r < R; ++r) {
                const auto ur = static_cast<std::size_t>(r);
                const NodePair pair = reg.pairs[ur];
                const double prior = params.prior_mean(pair.src, k, kp, pair.dst);
                double m = 0.0;
                if (auto a = blocks.active_index(pair)) m = state.m_hat[*a * P + up];
                const double b = prior + m;
                double& psi = reg.psi[ur * P + up];
                double& omega = reg.omega[ur * P + up];
                omega = b > 0.0 ? sample_pg(b, psi, rng, pg_terms) : 0.0;
                const double s = 1.0 / (omega + tau);
                const double kappa = 0.5 * (m - prior);
                const double mean = s * (kappa + tau * (X.row(r).dot(params.beta.row(p)) + logT + std::log(reg.pi[ur])));
                psi = sample_normal(mean, std::sqrt(s), rng);
            }
        }
    }
    sample_beta(state, covs, horizon, rng);
}

ChainResult run_chain(const HawkesParams& params0, const EventSequence& data, const CovariateMatrix* covs,
                      const GibbsOptions& options) {
    if (options.iterations < 1) throw DomainError("need at least one Gibbs iteration");
    const auto start = std::chrono::steady_clock::now();
    const PairBlocks blocks(data);
    const CovariateMatrix* cv = covs && covs->dim() > 0 ? covs : nullptr;
    const double T = data.horizon();
    const int burn_in = options.burn_in < 0 ? options.iterations / 2 : options.burn_in;

    ChainResult out;
    GibbsState st = init_gibbs(params0, data, blocks, cv, options.seed);
    const auto P = static_cast<std::size_t>(st.params.patterns());

    HawkesParams sum;
    std::map<NodePair, std::vector<double>> mu_sum;
    LogPosteriorOptions lpo;
    lpo.covs = cv;
    lpo.parallel = options.parallel;

    for (int it = 1; it <= options.iterations; ++it) {
        st.iteration = static_cast<std::uint64_t>(it);
        Rng rng = make_stream(options.seed, {static_cast<std::uint64_t>(it), 0x9bb5u});
        sample_branching(st, data, blocks, cv, options.parallel);
        sample_mu(st, blocks, T, cv, rng);
        sample_regression(st, blocks, cv, T, rng);
        sample_alpha(st, rng);

        ChainRecord rec;
        rec.iteration = it;
        rec.alpha = st.params.alpha_flat();
        for (double x : st.m_hat) rec.exogenous += x;
        for (double x : st.m_check) rec.endogenous += x;
        double mu_total = 0.0;
        for (std::size_t i = 0; i < st.params.mu.size(); ++i)
            for (double x : st.params.mu.values(i)) mu_total += x;
        if (st.params.mu.size() > 0) rec.mean_stored_mu = mu_total / static_cast<double>(st.params.mu.size() * P);
        if (options.record_log_posterior) {
            rec.log_posterior = log_posterior(st.params, data, blocks, &st.assignment, lpo);
            if (!std::isfinite(rec.log_posterior))
                throw NumericalError("Gibbs log-posterior is not finite at iteration " + std::to_string(it));
        }
        out.trace.push_back(std::move(rec));

        if (it <= burn_in) continue;
        if (out.kept == 0) {
            sum = st.params;
            for (std::size_t i = 0; i < st.params.mu.size(); ++i) {
                auto v = st.params.mu.values(i);
                mu_sum[st.params.mu.pairs()[i]].assign(v.begin(), v.end());
            }
        } else {
            sum.alpha += st.params.alpha;
            sum.beta += st.params.beta;
            for (std::size_t i = 0; i < st.params.mu.size(); ++i) {
                auto v = st.params.mu.values(i);
                auto& acc = mu_sum[st.params.mu.pairs()[i]];
                for (std::size_t p = 0; p < P; ++p) acc[p] += v[p];
            }
        }
        ++out.kept;
    }
    if (out.kept == 0) {
        out.posterior_mean = st.params;
    } else {
        const double inv = 1.0 / out.kept;
        sum.alpha *= inv;
        sum.beta *= inv;
        for (auto& [pair, v] : mu_sum)
            for (auto& x : v) x *= inv;
        sum.mu.assign(std::move(mu_sum));
        out.posterior_mean = std::move(sum);
    }
    out.final_state = std::move(st);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace hepm
