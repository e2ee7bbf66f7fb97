#include "hepm/hawkes_params.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace hepm {

CovariateMatrix::CovariateMatrix(int dim) : dim_(dim) {
    if (dim < 0) throw DomainError("covariate dimension must be nonnegative");
}

void CovariateMatrix::set(NodePair pair, std::vector<double> x) {
    if (static_cast<int>(x.size()) != dim_)
        throw DomainError("covariate vector has dimension " + std::to_string(x.size()) +
                          ", expected " + std::to_string(dim_));
    for (double v : x)
        if (!std::isfinite(v)) throw DomainError("covariate entries must be finite");
    auto [it, inserted] = rows_.emplace(pair, std::move(x));
    if (!inserted)
        throw DomainError("duplicate covariates for pair (" + std::to_string(pair.src) + "," +
                          std::to_string(pair.dst) + ")");
}

std::span<const double> CovariateMatrix::get(NodePair pair) const {
    auto it = rows_.find(pair);
    if (it == rows_.end()) return {};
    return it->second;
}

double CovariateMatrix::dot(NodePair pair, std::span<const double> beta) const {
    auto x = get(pair);
    double s = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) s += x[d] * beta[d];
    return s;
}

void SparseRates::assign(std::map<NodePair, std::vector<double>> entries) {
    pairs_.clear();
    values_.clear();
    pairs_.reserve(entries.size());
    values_.reserve(entries.size() * static_cast<std::size_t>(patterns_));
    for (auto& [pair, vals] : entries) {
        if (static_cast<int>(vals.size()) != patterns_)
            throw DomainError("base-rate entry must hold K^2 values");
        pairs_.push_back(pair);
        values_.insert(values_.end(), vals.begin(), vals.end());
    }
}

std::optional<std::size_t> SparseRates::find(NodePair pair) const {
    auto it = std::lower_bound(pairs_.begin(), pairs_.end(), pair);
    if (it == pairs_.end() || *it != pair) return std::nullopt;
    return static_cast<std::size_t>(it - pairs_.begin());
}

std::span<double> SparseRates::values(std::size_t index) {
    return {values_.data() + index * static_cast<std::size_t>(patterns_),
            static_cast<std::size_t>(patterns_)};
}

std::span<const double> SparseRates::values(std::size_t index) const {
    return {values_.data() + index * static_cast<std::size_t>(patterns_),
            static_cast<std::size_t>(patterns_)};
}

std::vector<double> HawkesParams::alpha_flat() const {
    const int K = num_communities;
    std::vector<double> out(static_cast<std::size_t>(K * K));
    for (int k = 0; k < K; ++k)
        for (int kp = 0; kp < K; ++kp) out[static_cast<std::size_t>(pattern_index(k, kp, K))] = alpha(k, kp);
    return out;
}

void HawkesParams::validate() const {
    const int K = num_communities;
    if (K < 1) throw DomainError("need at least one community");
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    if (alpha.rows() != K || alpha.cols() != K) throw DomainError("alpha must be K x K");
    if (omega.rows() != K || omega.cols() != K) throw DomainError("omega must be K x K");
    if (phi.rows() != num_nodes || phi.cols() != K) throw DomainError("phi must be V x K");
    if (beta.rows() != K * K) throw DomainError("beta must have K^2 rows");
    if (nu.size() != beta.cols()) throw DomainError("nu must have D entries");
    if (mu.patterns() != K * K) throw DomainError("mu entries must hold K^2 values");
    if ((alpha.array() < 0.0).any() || !alpha.allFinite()) throw DomainError("alpha must be nonnegative");
    if ((phi.array() < 0.0).any() || (omega.array() < 0.0).any())
        throw DomainError("community factors must be nonnegative");
    if (!(tau > 0.0) || (nu.array() <= 0.0).any()) throw DomainError("precisions must be positive");
    for (std::size_t i = 0; i < mu.size(); ++i)
        for (double v : mu.values(i))
            if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("base rates must be nonnegative");
}

HawkesParams make_hawkes_params(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& omega,
                                double delta, int covariate_dim) {
    HawkesParams p;
    p.num_nodes = static_cast<int>(phi.rows());
    p.num_communities = static_cast<int>(phi.cols());
    p.delta = delta;
    p.phi = phi;
    p.omega = omega;
    const int K = p.num_communities;
    p.alpha = Eigen::MatrixXd::Zero(K, K);
    p.mu = SparseRates(K * K);
    p.beta = Eigen::MatrixXd::Zero(K * K, covariate_dim);
    p.nu = Eigen::VectorXd::Ones(covariate_dim);
    p.validate();
    return p;
}

void fallback_base_rates(const HawkesParams& params, const CovariateMatrix* covs, NodePair pair,
                         std::span<double> out) {
    const int K = params.num_communities;
    auto x = covs ? covs->get(pair) : std::span<const double>{};
    for (int k = 0; k < K; ++k) {
        for (int kp = 0; kp < K; ++kp) {
            const int p = pattern_index(k, kp, K);
            double xb = 0.0;
            for (std::size_t d = 0; d < x.size(); ++d) xb += x[d] * params.beta(p, static_cast<Eigen::Index>(d));
            out[static_cast<std::size_t>(p)] =
                params.prior_mean(pair.src, k, kp, pair.dst) / (params.exposure + std::exp(-xb));
        }
    }
}

void pair_base_rates(const HawkesParams& params, const CovariateMatrix* covs, NodePair pair,
                     std::span<double> out) {
    if (auto idx = params.mu.find(pair)) {
        auto v = params.mu.values(*idx);
        std::copy(v.begin(), v.end(), out.begin());
        return;
    }
    fallback_base_rates(params, covs, pair, out);
}

double base_rate(const HawkesParams& params, const CovariateMatrix* covs, NodeId u, NodeId v,
                 int k, int kp) {
    const int K = params.num_communities;
    if (u < 0 || v < 0 || u >= params.num_nodes || v >= params.num_nodes || k < 0 || kp < 0 ||
        k >= K || kp >= K)
        throw DomainError("base_rate index out of range");
    const int p = pattern_index(k, kp, K);
    if (auto idx = params.mu.find({u, v})) return params.mu.values(*idx)[static_cast<std::size_t>(p)];
    std::vector<double> out(static_cast<std::size_t>(K * K));
    fallback_base_rates(params, covs, {u, v}, out);
    return out[static_cast<std::size_t>(p)];
}

double total_base_rate(const HawkesParams& params, const CovariateMatrix* covs) {
    // Closed form for covariate-free fallback pairs, then patch the pairs that
    // are stored explicitly or carry covariates.
    const Eigen::VectorXd s = params.phi.colwise().sum().transpose();
    double zeta_total = s.dot(params.omega * s);
    for (int u = 0; u < params.num_nodes; ++u) {
        Eigen::VectorXd fu = params.phi.row(u).transpose();
        zeta_total -= fu.dot(params.omega * fu);
    }
    const double plain = 1.0 / (params.exposure + 1.0);
    double total = zeta_total * plain;

    std::set<NodePair> special(params.mu.pairs().begin(), params.mu.pairs().end());
    if (covs)
        for (const auto& [pair, x] : covs->rows()) special.insert(pair);

    std::vector<double> rates(static_cast<std::size_t>(params.patterns()));
    for (const auto& pair : special) {
        if (pair.src == pair.dst) continue;
        const Eigen::VectorXd fu = params.phi.row(pair.src).transpose();
        const Eigen::VectorXd fv = params.phi.row(pair.dst).transpose();
        total -= fu.dot(params.omega * fv) * plain;
        pair_base_rates(params, covs, pair, rates);
        for (double r : rates) total += r;
    }
    return total;
}

LatentAssignment LatentAssignment::make_hard(std::size_t n, int num_patterns) {
    LatentAssignment a;
    a.num_patterns = num_patterns;
    a.soft = false;
    a.exogenous.assign(n, 1);
    a.pattern.assign(n, 0);
    return a;
}

LatentAssignment LatentAssignment::make_soft(std::size_t n, int num_patterns) {
    LatentAssignment a;
    a.num_patterns = num_patterns;
    a.soft = true;
    a.exo_resp.assign(n * static_cast<std::size_t>(num_patterns), 0.0);
    a.endo_resp.assign(n * static_cast<std::size_t>(num_patterns), 0.0);
    return a;
}

std::size_t LatentAssignment::size() const {
    if (soft) return exo_resp.size() / static_cast<std::size_t>(num_patterns);
    return pattern.size();
}

std::span<const double> LatentAssignment::exo(std::size_t i) const {
    return {exo_resp.data() + i * static_cast<std::size_t>(num_patterns),
            static_cast<std::size_t>(num_patterns)};
}

std::span<const double> LatentAssignment::endo(std::size_t i) const {
    return {endo_resp.data() + i * static_cast<std::size_t>(num_patterns),
            static_cast<std::size_t>(num_patterns)};
}

}  // namespace hepm
