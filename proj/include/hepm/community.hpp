#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hepm/common.hpp"
#include "hepm/event_core.hpp"

namespace hepm {

struct CommunityHyper {
    double c0{1.0};
    double e0{1.0};
    double f0{1.0};
    double r0{1.0};
    double xi{1.0};
    double chi{1.0};
};

/// Truncated hierarchical gamma process edge partition model state.
///
///   phi_{u,k}   ~ Gamma(a_u, 1/c_u)        a_u ~ Gamma(e0, 1/f0)
///   r_k         ~ Gamma(r0/K, 1/c0)
///   Omega_{k,k} ~ Gamma(xi r_k, 1/chi)     Omega_{k,k'} ~ Gamma(r_k r_k', 1/chi)
///   e_{u,v}     = 1(Poisson(phi_u^T Omega phi_v) >= 1)
/// with Gamma(1, 1) priors on c_u, c0, e0, f0, r0, xi, chi.
struct CommunityParams {
    Eigen::MatrixXd phi;    // V x K
    Eigen::MatrixXd omega;  // K x K
    Eigen::VectorXd r;      // K
    Eigen::VectorXd a;      // V
    Eigen::VectorXd c;      // V
    CommunityHyper hyper;

    int num_nodes() const { return static_cast<int>(phi.rows()); }
    int num_communities() const { return static_cast<int>(phi.cols()); }

    /// Throws DomainError on shape mismatch, negative or non-finite entries.
    void validate() const;
};

/// Binary directed adjacency aggregated from events, with an optional mask of
/// held-out entries. Held-out entries are imputed by the sampler.
class AggregatedGraph {
public:
    explicit AggregatedGraph(int num_nodes = 0);

    int num_nodes() const { return V_; }
    bool edge(NodeId u, NodeId v) const { return adj_[index(u, v)] != 0; }
    void set_edge(NodeId u, NodeId v, bool value);
    bool observed(NodeId u, NodeId v) const { return mask_[index(u, v)] != 0; }
    void hide(NodeId u, NodeId v);

    /// Observed entries with e_{u,v} = 1, row-major order.
    std::vector<NodePair> observed_edges() const;
    /// Held-out off-diagonal entries, row-major order.
    std::vector<NodePair> hidden_entries() const;
    std::size_t edge_count() const;
    int out_degree(NodeId u) const;
    int in_degree(NodeId v) const;

    bool operator==(const AggregatedGraph&) const = default;

private:
    std::size_t index(NodeId u, NodeId v) const {
        return static_cast<std::size_t>(u) * static_cast<std::size_t>(V_) + static_cast<std::size_t>(v);
    }
    int V_;
    std::vector<std::uint8_t> adj_;
    std::vector<std::uint8_t> mask_;
};

AggregatedGraph aggregate(const EventSequence& data);

/// Bernoulli-Poisson link 1 - exp(-phi_u^T Omega phi_v).
double edge_probability(const CommunityParams& params, NodeId u, NodeId v);

/// Initial state: phi ~ Gamma(1,1), r_k = 1/K, Omega at its conditional prior mean, hyperparameters 1.
CommunityParams initial_community_state(int num_nodes, int k_max, std::uint64_t seed);

/// Scratch diagnostics from one sweep.
struct SweepStats {
    std::uint64_t latent_total{0};  // sum of latent counts over observed edges and imputed entries
    std::uint64_t partition_total{0};  // sum of the multinomial partition
};

/// One full Gibbs sweep: latent zero-truncated Poisson counts on edges,
/// multinomial partition over (k, k'), then gamma-conjugate updates with
/// CRT augmentation for the shape parameters a_u, r_k, xi, r0, e0.
/// With update_xi false, xi is held at its current value.
CommunityParams gibbs_sweep(CommunityParams state, const AggregatedGraph& graph, std::uint64_t seed,
                            std::uint64_t sweep, SweepStats* stats = nullptr, bool update_xi = true);

/// Joint log-density of graph and all parameters (up to constants that do not depend on them).
double joint_log_density(const CommunityParams& params, const AggregatedGraph& graph);

/// Score used to pick the MAP sample: graph log-likelihood plus the prior
/// density of the log-parameters, over nodes and retained communities only.
/// Gamma densities with shape < 1 are unbounded near zero, so the plain joint
/// density rewards parameters that underflowed.
double map_score(const CommunityParams& params, const AggregatedGraph& graph);

/// Expected latent edge count routed through each community (either endpoint).
Eigen::VectorXd community_mass(const CommunityParams& params);

struct StaticFitOptions {
    int k_max{100};
    int sweeps{10000};
    std::uint64_t seed{0};
    /// Average post-burn-in samples instead of selecting the MAP sample.
    bool posterior_mean{false};
    /// xi is held at this value for the first half of burn-in. A random start
    /// otherwise tends to settle in a low-xi mode that splits each block over
    /// several communities joined by off-diagonal rates; a large diagonal
    /// boost lets fragments merge. Post-burn-in sweeps are unaffected.
    double warmup_xi{10.0};
};

struct StaticFit {
    CommunityParams estimate;
    /// map_score of the estimate and per sweep.
    double log_density{0.0};
    int selected_sweep{0};
    std::vector<double> log_density_trace;
    /// Communities with r_k above 1% of max_k r_k, per sweep.
    std::vector<int> active_trace;
    bool degenerate{false};
};

/// Runs `sweeps` sweeps, discards the first half, and returns the sample with
/// the highest map_score (or the post-burn-in mean).
StaticFit fit_map(const AggregatedGraph& graph, const StaticFitOptions& options);

/// Number of communities with r_k > rel * max r.
int count_active_communities(const Eigen::VectorXd& r, double rel = 0.01);

/// Keep communities whose mass exceeds rel * max mass (at least one). A small
/// community can have r_k near zero while xi keeps its Omega_kk large, so r
/// alone would drop it.
CommunityParams prune_communities(const CommunityParams& params, double rel = 0.01);

}  // namespace hepm
