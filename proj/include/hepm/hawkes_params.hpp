#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hepm/common.hpp"

namespace hepm {

/// Per-pair covariate vectors x_{u,v} of dimension D. Absent pairs read as zero.
class CovariateMatrix {
public:
    CovariateMatrix() = default;
    explicit CovariateMatrix(int dim);

    int dim() const { return dim_; }
    bool empty() const { return rows_.empty(); }

    /// Throws DomainError on a dimension mismatch, non-finite entry or duplicate pair.
    void set(NodePair pair, std::vector<double> x);

    /// Covariates of `pair`, or an empty span when the pair has none.
    std::span<const double> get(NodePair pair) const;

    /// x_{u,v}^T beta (0 for absent pairs).
    double dot(NodePair pair, std::span<const double> beta) const;

    const std::map<NodePair, std::vector<double>>& rows() const { return rows_; }

private:
    int dim_{0};
    std::map<NodePair, std::vector<double>> rows_;
};

/// Sparse map (u, v) -> K^2 base rates, kept sorted by pair.
class SparseRates {
public:
    SparseRates() = default;
    explicit SparseRates(int num_patterns) : patterns_(num_patterns) {}

    /// Replace contents; `pairs` need not be sorted. Every value vector has K^2 entries.
    void assign(std::map<NodePair, std::vector<double>> entries);

    std::optional<std::size_t> find(NodePair pair) const;
    std::span<double> values(std::size_t index);
    std::span<const double> values(std::size_t index) const;
    const std::vector<NodePair>& pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }
    int patterns() const { return patterns_; }

    bool operator==(const SparseRates&) const = default;

private:
    int patterns_{1};
    std::vector<NodePair> pairs_;
    std::vector<double> values_;
};

/// Stage-2 parameters Theta of the pattern-factorized Hawkes model.
///
/// Base rates mu_{u,k,k',v} are stored only for pairs listed in `mu`; every
/// other pair uses the factorized fallback
///     mu~_{u,k,k',v} / (exposure + exp(-x_{u,v}^T beta_{k,k'}))
/// with mu~ = phi_{u,k} Omega_{k,k'} phi_{v,k'}. With exposure = 0 this is the
/// prior mean mu~ * exp(x^T beta); after fitting on [0, T] it is set to T so
/// that event-free pairs carry exactly the closed-form update value.
struct HawkesParams {
    int num_nodes{0};
    int num_communities{1};
    double delta{1.0};
    Eigen::MatrixXd alpha;  // K x K, alpha(k, k')
    Eigen::MatrixXd phi;    // V x K
    Eigen::MatrixXd omega;  // K x K
    SparseRates mu;
    Eigen::MatrixXd beta;  // K^2 x D, row = flattened pattern
    double tau{1.0};
    Eigen::VectorXd nu;  // D prior precisions scale
    double exposure{0.0};
    double alpha_shape{1.0};  // e0
    double alpha_rate{1.0};   // f0

    int patterns() const { return num_communities * num_communities; }
    int covariate_dim() const { return static_cast<int>(beta.cols()); }

    /// mu~_{u,k,k',v} = phi_{u,k} Omega_{k,k'} phi_{v,k'}
    double prior_mean(NodeId u, int k, int kp, NodeId v) const {
        return phi(u, k) * omega(k, kp) * phi(v, kp);
    }

    /// Row-major flattened alpha (index k * K + k').
    std::vector<double> alpha_flat() const;

    /// Throws DomainError when shapes disagree or entries are out of range.
    void validate() const;
};

/// Params with zero excitation and no stored mu, sized for V nodes and K communities.
HawkesParams make_hawkes_params(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& omega,
                                double delta, int covariate_dim = 0);

/// mu_{u,k,k',v}: stored value if present, else the factorized fallback.
double base_rate(const HawkesParams& params, const CovariateMatrix* covs, NodeId u, NodeId v,
                 int k, int kp);

/// All K^2 base rates of pair (u, v), written to `out`.
void pair_base_rates(const HawkesParams& params, const CovariateMatrix* covs, NodePair pair,
                     std::span<double> out);

/// Fallback rates of (u, v), ignoring any stored entry.
void fallback_base_rates(const HawkesParams& params, const CovariateMatrix* covs,
                         NodePair pair, std::span<double> out);

/// Sum over all ordered pairs u != v and patterns of mu_{u,k,k',v}.
double total_base_rate(const HawkesParams& params, const CovariateMatrix* covs);

/// Per-event latent variables: hard (b_i, z_i) or soft responsibilities.
struct LatentAssignment {
    int num_patterns{1};
    bool soft{false};
    // hard mode
    std::vector<std::uint8_t> exogenous;
    std::vector<int> pattern;
    // soft mode, N x P row-major
    std::vector<double> exo_resp;
    std::vector<double> endo_resp;

    static LatentAssignment make_hard(std::size_t n, int num_patterns);
    static LatentAssignment make_soft(std::size_t n, int num_patterns);

    std::size_t size() const;

    std::span<const double> exo(std::size_t i) const;
    std::span<const double> endo(std::size_t i) const;
};

}  // namespace hepm
