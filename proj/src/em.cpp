#include "hepm/em.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "hepm/intensity.hpp"
#include "hepm/polya_gamma.hpp"

namespace hepm {

RegressionState make_regression_state(const PairBlocks& blocks, const CovariateMatrix* covs,
                                      int num_patterns, double horizon) {
    std::set<NodePair> pairs(blocks.active_pairs().begin(), blocks.active_pairs().end());
    if (covs)
        for (const auto& [pair, x] : covs->rows())
            if (pair.src != pair.dst) pairs.insert(pair);
    RegressionState reg;
    reg.pairs.assign(pairs.begin(), pairs.end());
    const auto n = reg.pairs.size() * static_cast<std::size_t>(num_patterns);
    reg.psi.assign(n, std::log(horizon));
    reg.omega.assign(n, 0.0);
    reg.pi.assign(reg.pairs.size(), 1.0);
    return reg;
}

Eigen::MatrixXd design_matrix(const RegressionState& reg, const CovariateMatrix& covs) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(reg.size()), covs.dim());
    for (std::size_t r = 0; r < reg.size(); ++r) {
        auto x = covs.get(reg.pairs[r]);
        for (std::size_t d = 0; d < x.size(); ++d)
            X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = x[d];
    }
    return X;
}

EMState init_em(const HawkesParams& params0, const EventSequence& data, const PairBlocks& blocks,
                const CovariateMatrix* covs) {
    EMState s;
    s.params = params0;
    const int K = s.params.num_communities;
    const int P = K * K;
    const int D = covs ? covs->dim() : 0;
    s.params.alpha = Eigen::MatrixXd::Constant(K, K, 0.1);
    s.params.beta = Eigen::MatrixXd::Zero(P, D);
    if (s.params.nu.size() != D) s.params.nu = Eigen::VectorXd::Ones(D);
    s.params.exposure = data.horizon();
    s.params.mu = SparseRates(P);
    std::map<NodePair, std::vector<double>> entries;
    for (const auto& pair : blocks.active_pairs()) {
        std::vector<double> v(static_cast<std::size_t>(P));
        fallback_base_rates(s.params, covs, pair, v);
        entries.emplace(pair, std::move(v));
    }
    s.params.mu.assign(std::move(entries));
    s.params.validate();
    s.responsibilities = LatentAssignment::make_soft(data.size(), P);
    s.regression = make_regression_state(blocks, D > 0 ? covs : nullptr, P, data.horizon());
    return s;
}

void e_step(EMState& state, const EventSequence& data, const PairBlocks& blocks,
            const CovariateMatrix* covs, bool parallel) {
    PassOptions po;
    po.mode = TagMode::soft;
    po.record = &state.responsibilities;
    po.covs = covs;
    po.parallel = parallel;
    auto pass = forward_pass(state.params, data, blocks, po);
    state.m_hat = std::move(pass.m_hat);
    state.m_check = std::move(pass.m_check);
    state.trigger_mass = std::move(pass.trigger_mass);
}

namespace {

double xbeta(const HawkesParams& params, const CovariateMatrix* covs, NodePair pair, int p) {
    if (!covs || params.covariate_dim() == 0) return 0.0;
    auto x = covs->get(pair);
    double s = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) s += x[d] * params.beta(p, static_cast<Eigen::Index>(d));
    return s;
}

/// m_hat of (pair, p), 0 for pairs without events.
double pair_m_hat(const EMState& state, const PairBlocks& blocks, NodePair pair, int p) {
    auto a = blocks.active_index(pair);
    if (!a) return 0.0;
    return state.m_hat[*a * static_cast<std::size_t>(state.params.patterns()) + static_cast<std::size_t>(p)];
}

}  // namespace

void m_step_mu(EMState& state, const PairBlocks& blocks, double horizon, const CovariateMatrix* covs) {
    auto& params = state.params;
    const int K = params.num_communities;
    const auto P = static_cast<std::size_t>(params.patterns());
    params.exposure = horizon;
    std::map<NodePair, std::vector<double>> entries;
    const auto& active = blocks.active_pairs();
    for (std::size_t a = 0; a < active.size(); ++a) {
        const NodePair pair = active[a];
        std::vector<double> v(P);
        for (int k = 0; k < K; ++k) {
            for (int kp = 0; kp < K; ++kp) {
                const int p = pattern_index(k, kp, K);
                const double prior = params.prior_mean(pair.src, k, kp, pair.dst);
                v[static_cast<std::size_t>(p)] = (prior + state.m_hat[a * P + static_cast<std::size_t>(p)]) /
                                                 (horizon + std::exp(-xbeta(params, covs, pair, p)));
            }
        }
        entries.emplace(pair, std::move(v));
    }
    params.mu.assign(std::move(entries));
}

void m_step_alpha(EMState& state) {
    auto& params = state.params;
    const int K = params.num_communities;
    const auto P = static_cast<std::size_t>(params.patterns());
    std::vector<double> endo(P, 0.0);
    for (std::size_t i = 0; i < state.m_check.size(); ++i) endo[i % P] += state.m_check[i];
    for (int k = 0; k < K; ++k) {
        for (int kp = 0; kp < K; ++kp) {
            const auto p = static_cast<std::size_t>(pattern_index(k, kp, K));
            const double mass = state.trigger_mass.empty() ? 0.0 : state.trigger_mass[p];
            params.alpha(k, kp) = (params.alpha_shape + endo[p]) / (params.alpha_rate + mass);
        }
    }
}

void m_step_regression(EMState& state, const PairBlocks& blocks, const CovariateMatrix* covs,
                       double horizon) {
    auto& params = state.params;
    const int D = params.covariate_dim();
    if (!covs || D == 0) return;
    const int K = params.num_communities;
    const auto P = static_cast<std::size_t>(params.patterns());
    auto& reg = state.regression;
    const Eigen::MatrixXd X = design_matrix(reg, *covs);
    const double logT = std::log(horizon);
    const double tau = params.tau;

    Eigen::MatrixXd gram = X.transpose() * X;
    for (Eigen::Index d = 0; d < D; ++d) gram(d, d) += 1.0 / (params.nu(d) * tau);
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericalError("regression system is not positive definite");

    const auto R = static_cast<Eigen::Index>(reg.size());
    for (int k = 0; k < K; ++k) {
        for (int kp = 0; kp < K; ++kp) {
            const int p = pattern_index(k, kp, K);
            const auto up = static_cast<std::size_t>(p);
            Eigen::VectorXd target(R);
            for (Eigen::Index r = 0; r < R; ++r) target(r) = reg.psi[static_cast<std::size_t>(r) * P + up] - logT;
            params.beta.row(p) = llt.solve(X.transpose() * target).transpose();
            for (Eigen::Index r = 0; r < R; ++r) {
                const auto ur = static_cast<std::size_t>(r);
                const NodePair pair = reg.pairs[ur];
                const double prior = params.prior_mean(pair.src, k, kp, pair.dst);
                const double m = pair_m_hat(state, blocks, pair, p);
                const double b = prior + m;
                double& psi = reg.psi[ur * P + up];
                double& omega = reg.omega[ur * P + up];
                omega = b > 0.0 ? pg_expectation(b, psi) : 0.0;
                const double kappa = 0.5 * (m - prior);
                psi = (kappa + tau * (X.row(r).dot(params.beta.row(p)) + logT)) / (omega + tau);
            }
        }
    }
}

double regression_objective(const EMState& state, const PairBlocks& blocks,
                            const CovariateMatrix* covs, double horizon) {
    const auto& params = state.params;
    const int D = params.covariate_dim();
    if (!covs || D == 0) return 0.0;
    const int K = params.num_communities;
    const auto P = static_cast<std::size_t>(params.patterns());
    const auto& reg = state.regression;
    const double logT = std::log(horizon);
    double obj = 0.0;
    for (std::size_t r = 0; r < reg.size(); ++r) {
        const NodePair pair = reg.pairs[r];
        for (int k = 0; k < K; ++k) {
            for (int kp = 0; kp < K; ++kp) {
                const int p = pattern_index(k, kp, K);
                const double psi = reg.psi[r * P + static_cast<std::size_t>(p)];
                const double omega = reg.omega[r * P + static_cast<std::size_t>(p)];
                const double kappa = 0.5 * (pair_m_hat(state, blocks, pair, p) - params.prior_mean(pair.src, k, kp, pair.dst));
                const double resid = psi - xbeta(params, covs, pair, p) - logT;
                obj += kappa * psi - 0.5 * omega * psi * psi - 0.5 * params.tau * resid * resid;
            }
        }
    }
    for (Eigen::Index p = 0; p < params.beta.rows(); ++p)
        for (Eigen::Index d = 0; d < D; ++d) obj -= 0.5 * params.beta(p, d) * params.beta(p, d) / params.nu(d);
    return obj;
}

EMFit fit_em(const HawkesParams& params0, const EventSequence& data, const CovariateMatrix* covs,
             const EMOptions& options) {
    if (options.max_iter < 1) throw DomainError("max_iter must be at least 1");
    const auto start = std::chrono::steady_clock::now();
    const PairBlocks blocks(data);
    const CovariateMatrix* cv = covs && covs->dim() > 0 ? covs : nullptr;
    EMFit fit;
    fit.state = init_em(params0, data, blocks, cv);
    auto& st = fit.state;
    const double T = data.horizon();
    LogPosteriorOptions lpo;
    lpo.covs = cv;
    lpo.parallel = options.parallel;

    auto objective = [&](int iter) {
        const double v = log_posterior(st.params, data, blocks, nullptr, lpo);
        if (!std::isfinite(v))
            throw NumericalError("EM objective is not finite at iteration " + std::to_string(iter));
        return v;
    };
    st.objective_trace.push_back(objective(0));
    for (int it = 1; it <= options.max_iter; ++it) {
        e_step(st, data, blocks, cv, options.parallel);
        m_step_mu(st, blocks, T, cv);
        m_step_regression(st, blocks, cv, T);
        m_step_alpha(st);
        if (cv) st.regression_trace.push_back(regression_objective(st, blocks, cv, T));
        const double value = objective(it);
        const double prev = st.objective_trace.back();
        st.objective_trace.push_back(value);
        fit.iterations = it;
        if (std::abs(value - prev) < options.tol * std::abs(value)) {
            fit.converged = true;
            break;
        }
    }
    // final responsibilities consistent with the returned parameters
    e_step(st, data, blocks, cv, options.parallel);
    fit.params = st.params;
    fit.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return fit;
}

}  // namespace hepm
