#include "hepm/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "hepm/forward_pass.hpp"
#include "hepm/random.hpp"

namespace hepm {

HawkesEpmModel::HawkesEpmModel(HawkesParams params, const EventSequence& train, const CovariateMatrix* covs)
    : params_(std::move(params)), horizon_(train.horizon()) {
    if (covs && covs->dim() > 0) {
        covs_ = *covs;
        has_covs_ = true;
    }
    alpha_ = params_.alpha_flat();
    PassOptions po;
    po.mode = TagMode::soft;
    po.covs = has_covs_ ? &covs_ : nullptr;
    po.pair_stats = false;
    po.horizon_state = true;
    auto pass = forward_pass(params_, train, PairBlocks(train), po);
    state_ = std::move(pass.horizon_state);
}

double HawkesEpmModel::intensity(NodeId u, NodeId v, double t) const {
    if (t < horizon_) throw DomainError("Hawkes-EPM queries must not precede the training horizon");
    std::vector<double> mu(alpha_.size());
    pair_base_rates(params_, has_covs_ ? &covs_ : nullptr, {u, v}, mu);
    double lam = 0.0;
    for (double m : mu) lam += m;
    auto it = state_.find({u, v});
    if (it != state_.end()) {
        const double f = std::exp(-(t - horizon_) / params_.delta);
        for (std::size_t p = 0; p < alpha_.size(); ++p) lam += alpha_[p] * it->second[p] * f;
    }
    return lam;
}

double HawkesEpmModel::window_integral(NodeId u, NodeId v, double t, double window) const {
    if (t < horizon_) throw DomainError("Hawkes-EPM queries must not precede the training horizon");
    std::vector<double> mu(alpha_.size());
    pair_base_rates(params_, has_covs_ ? &covs_ : nullptr, {u, v}, mu);
    double total = 0.0;
    for (double m : mu) total += m * window;
    auto it = state_.find({u, v});
    if (it != state_.end()) {
        const double d = params_.delta;
        const double f = std::exp(-(t - horizon_) / d) * -d * std::expm1(-window / d);
        for (std::size_t p = 0; p < alpha_.size(); ++p) total += alpha_[p] * it->second[p] * f;
    }
    return total;
}

Split chronological_split(const EventSequence& data, double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("train fraction must lie in (0, 1)");
    if (data.size() < 2) throw DomainError("need at least two events to split");
    auto n = static_cast<std::size_t>(std::ceil(p * static_cast<double>(data.size()) - 1e-9));
    n = std::clamp<std::size_t>(n, 1, data.size() - 1);
    Split s;
    s.t_split = data[n - 1].t;
    // a horizon of 0 is not allowed; the first event may sit at t = 0
    const double horizon = s.t_split > 0.0 ? s.t_split : std::numeric_limits<double>::min();
    s.train = data.prefix(n, horizon);
    std::vector<Event> rest(data.events().begin() + static_cast<std::ptrdiff_t>(n), data.events().end());
    s.test = EventSequence(std::move(rest), data.horizon(), data.node_count());
    return s;
}

std::vector<ScoredPair> score_pairs(const LinkModel& model, int num_nodes, double t, double window,
                                    const EventSequence& test) {
    std::map<NodePair, int> hit;
    for (const auto& e : test)
        if (e.t >= t && e.t < t + window) hit[{e.src, e.dst}] = 1;
    std::vector<ScoredPair> out;
    out.reserve(static_cast<std::size_t>(num_nodes) * static_cast<std::size_t>(std::max(num_nodes - 1, 0)));
    for (int u = 0; u < num_nodes; ++u) {
        for (int v = 0; v < num_nodes; ++v) {
            if (u == v) continue;
            auto it = hit.find({u, v});
            out.push_back({{u, v}, link_probability(model, u, v, t, window), it == hit.end() ? 0 : 1});
        }
    }
    return out;
}

namespace {

std::vector<std::size_t> order_desc(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

}  // namespace

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DomainError("scores and labels differ in length");
    double pos = 0.0;
    for (int l : labels) pos += l != 0;
    const double neg = static_cast<double>(labels.size()) - pos;
    if (pos == 0.0) throw DomainError("AUC-ROC needs at least one positive label");
    if (neg == 0.0) throw DomainError("AUC-ROC needs at least one negative label");
    auto idx = order_desc(scores);
    // count (positive, negative) pairs ranked correctly, ties as 1/2
    double correct = 0.0;
    double neg_below = neg;
    std::size_t g = 0;
    while (g < idx.size()) {
        std::size_t h = g;
        double gp = 0.0;
        double gn = 0.0;
        while (h < idx.size() && scores[idx[h]] == scores[idx[g]]) {
            (labels[idx[h]] ? gp : gn) += 1.0;
            ++h;
        }
        neg_below -= gn;
        correct += gp * (neg_below + 0.5 * gn);
        g = h;
    }
    return correct / (pos * neg);
}

double auc_pr(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DomainError("scores and labels differ in length");
    double pos = 0.0;
    for (int l : labels) pos += l != 0;
    if (pos == 0.0) throw DomainError("AUC-PR needs at least one positive label");
    auto idx = order_desc(scores);
    double tp = 0.0;
    double seen = 0.0;
    double ap = 0.0;
    std::size_t g = 0;
    while (g < idx.size()) {
        std::size_t h = g;
        double gp = 0.0;
        while (h < idx.size() && scores[idx[h]] == scores[idx[g]]) {
            gp += labels[idx[h]] != 0;
            ++h;
        }
        tp += gp;
        seen += static_cast<double>(h - g);
        ap += gp / pos * (tp / seen);
        g = h;
    }
    return ap;
}

double auc_roc(const std::vector<ScoredPair>& table) {
    std::vector<double> s;
    std::vector<int> l;
    for (const auto& r : table) {
        s.push_back(r.score);
        l.push_back(r.label);
    }
    return auc_roc(s, l);
}

double auc_pr(const std::vector<ScoredPair>& table) {
    std::vector<double> s;
    std::vector<int> l;
    for (const auto& r : table) {
        s.push_back(r.score);
        l.push_back(r.label);
    }
    return auc_pr(s, l);
}

HawkesParams stage_one(const EventSequence& train, int k_max, int sweeps, std::uint64_t seed, double delta,
                       int covariate_dim, int* active_communities) {
    StaticFitOptions so;
    so.k_max = k_max;
    so.sweeps = sweeps;
    so.seed = seed;
    auto fit = fit_map(aggregate(train), so);
    auto xi = prune_communities(fit.estimate);
    if (active_communities) *active_communities = xi.num_communities();
    return make_hawkes_params(xi.phi, xi.omega, delta, covariate_dim);
}

std::vector<MetricRow> run_experiment(const EventSequence& data, const CovariateMatrix* covs,
                                      const ExperimentConfig& config) {
    const CovariateMatrix* cv = covs && covs->dim() > 0 ? covs : nullptr;
    const int D = cv ? cv->dim() : 0;
    const int V = data.node_count();
    std::vector<MetricRow> rows;
    for (std::size_t pi = 0; pi < config.train_fractions.size(); ++pi) {
        const double p = config.train_fractions[pi];
        const auto split = chronological_split(data, p);
        const std::uint64_t split_seed = mix64(config.seed ^ mix64(pi + 1));

        const bool need_stage1 =
            config.block_k == 0 || std::find(config.models.begin(), config.models.end(), "hawkes_epm") != config.models.end();
        HawkesParams xi;
        int active = config.block_k;
        double stage1_seconds = 0.0;
        std::string stage1_error;
        if (need_stage1) {
            const auto t0 = std::chrono::steady_clock::now();
            try {
                int found = 0;
                xi = stage_one(split.train, config.k_max, config.sweeps, split_seed, config.delta, D, &found);
                if (active == 0) active = found;
            } catch (const std::exception& e) {
                stage1_error = e.what();
            }
            stage1_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        if (active == 0) active = 1;

        for (const auto& name : config.models) {
            MetricRow row;
            row.model = name;
            row.p = p;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                std::unique_ptr<LinkModel> model;
                if (name == "pp") {
                    model = std::make_unique<PoissonModel>(fit_pp(split.train, config.pp_smoothing));
                } else if (name == "mhp") {
                    model = std::make_unique<MhpModel>(fit_mhp(split.train));
                } else if (name == "chip" || name == "hawkes_sbm") {
                    const auto kind = name == "chip" ? BlockHawkesModel::Kind::chip : BlockHawkesModel::Kind::sbm;
                    model = std::make_unique<BlockHawkesModel>(fit_blockmodel(split.train, active, kind, split_seed));
                } else if (name == "hawkes_epm") {
                    if (!stage1_error.empty()) throw NumericalError("stage 1 failed: " + stage1_error);
                    HawkesParams theta;
                    if (config.stage2 == "gibbs") {
                        GibbsOptions go;
                        go.iterations = config.gibbs_iterations;
                        go.seed = split_seed;
                        go.record_log_posterior = false;
                        theta = run_chain(xi, split.train, cv, go).posterior_mean;
                    } else {
                        theta = fit_em(xi, split.train, cv, config.em).params;
                    }
                    model = std::make_unique<HawkesEpmModel>(std::move(theta), split.train, cv);
                } else {
                    throw DomainError("unknown model '" + name + "'");
                }
                row.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                if (name == "hawkes_epm") row.fit_seconds += stage1_seconds;
                auto table = score_pairs(*model, V, split.t_split, config.window, split.test);
                row.auc_roc = auc_roc(table);
                row.auc_pr = auc_pr(table);
                if (config.keep_scores) row.scores = std::move(table);
            } catch (const std::exception& e) {
                row.error = e.what();
                row.auc_roc = std::numeric_limits<double>::quiet_NaN();
                row.auc_pr = std::numeric_limits<double>::quiet_NaN();
                row.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
            if (!config.timings) row.fit_seconds = std::numeric_limits<double>::quiet_NaN();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace hepm
