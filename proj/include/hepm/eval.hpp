#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hepm/baselines.hpp"
#include "hepm/community.hpp"
#include "hepm/em.hpp"
#include "hepm/event_core.hpp"
#include "hepm/gibbs.hpp"
#include "hepm/hawkes_params.hpp"

namespace hepm {

/// Fitted Hawkes-EPM with its training history tagged by forward
/// responsibilities and frozen at the training horizon.
class HawkesEpmModel final : public LinkModel {
public:
    HawkesEpmModel(HawkesParams params, const EventSequence& train, const CovariateMatrix* covs = nullptr);
    std::string name() const override { return "hawkes_epm"; }
    double intensity(NodeId u, NodeId v, double t) const override;
    /// mu_{u,v} window + sum_p alpha_p delta H_p (e^{-(t-T)/delta} - e^{-(t+window-T)/delta}).
    double window_integral(NodeId u, NodeId v, double t, double window) const override;

    const HawkesParams& params() const { return params_; }
    double horizon() const { return horizon_; }

private:
    HawkesParams params_;
    CovariateMatrix covs_;
    bool has_covs_{false};
    double horizon_;
    std::vector<double> alpha_;
    std::map<NodePair, std::vector<double>> state_;
};

struct Split {
    EventSequence train;
    EventSequence test;
    double t_split{0.0};
};

/// train = first ceil(p N) events observed over [0, t_split], t_split = time of the last of them.
Split chronological_split(const EventSequence& data, double p);

struct ScoredPair {
    NodePair pair;
    double score{0.0};
    int label{0};
};

/// Scores all V(V-1) ordered pairs with link_probability(model, u, v, t, window);
/// label = at least one test event of the pair in [t, t + window).
std::vector<ScoredPair> score_pairs(const LinkModel& model, int num_nodes, double t, double window,
                                    const EventSequence& test);

/// Mann-Whitney AUC with ties counted 1/2. Throws DomainError without both classes.
double auc_roc(std::span<const double> scores, std::span<const int> labels);
/// Average precision, tied scores entering as one group. Throws DomainError without positives.
double auc_pr(std::span<const double> scores, std::span<const int> labels);
double auc_roc(const std::vector<ScoredPair>& table);
double auc_pr(const std::vector<ScoredPair>& table);

struct ExperimentConfig {
    std::vector<double> train_fractions{0.5, 0.6, 0.7, 0.8, 0.9};
    double window{50.0};
    std::vector<std::string> models{"pp", "mhp", "chip", "hawkes_sbm", "hawkes_epm"};
    std::uint64_t seed{0};
    int k_max{100};
    int sweeps{10000};
    double delta{0.1};
    /// "em" or "gibbs"
    std::string stage2{"em"};
    EMOptions em;
    int gibbs_iterations{1000};
    /// Blocks of CHIP / Hawkes-SBM; 0 takes the number of active stage-1 communities.
    int block_k{0};
    double pp_smoothing{0.01};
    bool timings{true};
    bool keep_scores{false};
};

struct MetricRow {
    std::string model;
    double p{0.0};
    double auc_roc{0.0};
    double auc_pr{0.0};
    double fit_seconds{0.0};
    std::string error;
    std::vector<ScoredPair> scores;
};

/// For each p: split, fit every model on the training part, score all pairs at
/// t_split. A failing model is recorded in its row (NaN metrics) and the run continues.
std::vector<MetricRow> run_experiment(const EventSequence& data, const CovariateMatrix* covs,
                                      const ExperimentConfig& config);

/// Stage 1 on the aggregated training graph, pruned; then params with zero excitation.
HawkesParams stage_one(const EventSequence& train, int k_max, int sweeps, std::uint64_t seed,
                       double delta, int covariate_dim, int* active_communities = nullptr);

}  // namespace hepm
