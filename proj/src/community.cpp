#include "hepm/community.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <string>
#include <utility>

#include "hepm/random.hpp"

namespace hepm {

namespace {

constexpr double kFloor = std::numeric_limits<double>::min();

double gamma_floor(double shape, double scale, Rng& rng) {
    return std::max(sample_gamma(shape, scale, rng), kFloor);
}

double log_gamma_density(double x, double shape, double rate) {
    shape = std::max(shape, kFloor);
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

// density of log x when x ~ Gamma(shape, rate); bounded above for every shape
double log_gamma_density_log_scale(double x, double shape, double rate) {
    shape = std::max(shape, kFloor);
    return shape * std::log(rate * x) - std::lgamma(shape) - rate * x;
}

Eigen::MatrixXd omega_prior_mean(const Eigen::VectorXd& r, double xi, double chi) {
    const auto K = r.size();
    Eigen::MatrixXd omega(K, K);
    for (Eigen::Index k = 0; k < K; ++k)
        for (Eigen::Index kp = 0; kp < K; ++kp)
            omega(k, kp) = (k == kp ? xi * r(k) : r(k) * r(kp)) / chi;
    return omega;
}

}  // namespace

void CommunityParams::validate() const {
    const auto V = phi.rows();
    const auto K = phi.cols();
    if (K < 1) throw DomainError("community state needs K >= 1");
    if (omega.rows() != K || omega.cols() != K || r.size() != K || a.size() != V || c.size() != V)
        throw DomainError("community state shapes disagree");
    if (!phi.allFinite() || !omega.allFinite() || !r.allFinite() || !a.allFinite() || !c.allFinite())
        throw DomainError("community state has non-finite entries");
    if ((phi.array() < 0.0).any() || (omega.array() < 0.0).any() || (r.array() < 0.0).any())
        throw DomainError("community state has negative entries");
    if ((a.array() <= 0.0).any() || (c.array() <= 0.0).any())
        throw DomainError("sociabilities and rates must be positive");
    const auto& h = hyper;
    for (double x : {h.c0, h.e0, h.f0, h.r0, h.xi, h.chi})
        if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("hyperparameters must be positive");
}

AggregatedGraph::AggregatedGraph(int num_nodes)
    : V_(num_nodes),
      adj_(static_cast<std::size_t>(num_nodes) * static_cast<std::size_t>(num_nodes), 0),
      mask_(adj_.size(), 1) {
    if (num_nodes < 0) throw DomainError("negative node count");
    for (int u = 0; u < V_; ++u) mask_[index(u, u)] = 0;
}

void AggregatedGraph::set_edge(NodeId u, NodeId v, bool value) {
    if (u == v) throw DomainError("self-edges are excluded");
    adj_[index(u, v)] = value ? 1 : 0;
}

void AggregatedGraph::hide(NodeId u, NodeId v) {
    if (u == v) throw DomainError("self-edges are excluded");
    mask_[index(u, v)] = 0;
}

std::vector<NodePair> AggregatedGraph::observed_edges() const {
    std::vector<NodePair> out;
    for (int u = 0; u < V_; ++u)
        for (int v = 0; v < V_; ++v)
            if (u != v && observed(u, v) && edge(u, v)) out.push_back({u, v});
    return out;
}

std::vector<NodePair> AggregatedGraph::hidden_entries() const {
    std::vector<NodePair> out;
    for (int u = 0; u < V_; ++u)
        for (int v = 0; v < V_; ++v)
            if (u != v && !observed(u, v)) out.push_back({u, v});
    return out;
}

std::size_t AggregatedGraph::edge_count() const {
    return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), std::uint8_t{1}));
}

int AggregatedGraph::out_degree(NodeId u) const {
    int d = 0;
    for (int v = 0; v < V_; ++v) d += adj_[index(u, v)];
    return d;
}

int AggregatedGraph::in_degree(NodeId v) const {
    int d = 0;
    for (int u = 0; u < V_; ++u) d += adj_[index(u, v)];
    return d;
}

AggregatedGraph aggregate(const EventSequence& data) {
    AggregatedGraph g(data.node_count());
    for (const auto& e : data) g.set_edge(e.src, e.dst, true);
    return g;
}

double edge_probability(const CommunityParams& params, NodeId u, NodeId v) {
    if (u == v) throw DomainError("edge probability of a self-pair");
    if (u < 0 || v < 0 || u >= params.num_nodes() || v >= params.num_nodes())
        throw DomainError("node id out of range");
    const double zeta = params.phi.row(u).dot(params.omega * params.phi.row(v).transpose());
    return -std::expm1(-zeta);
}

CommunityParams initial_community_state(int num_nodes, int k_max, std::uint64_t seed) {
    if (num_nodes < 1 || k_max < 1) throw DomainError("need V >= 1 and K >= 1");
    Rng rng = make_stream(seed, {0xC0FFEE});
    CommunityParams s;
    s.phi.resize(num_nodes, k_max);
    for (int u = 0; u < num_nodes; ++u)
        for (int k = 0; k < k_max; ++k) s.phi(u, k) = gamma_floor(1.0, 1.0, rng);
    s.r = Eigen::VectorXd::Constant(k_max, 1.0 / k_max);
    s.omega = omega_prior_mean(s.r, s.hyper.xi, s.hyper.chi);
    s.a = Eigen::VectorXd::Ones(num_nodes);
    s.c = Eigen::VectorXd::Ones(num_nodes);
    return s;
}

CommunityParams gibbs_sweep(CommunityParams state, const AggregatedGraph& graph, std::uint64_t seed,
                            std::uint64_t sweep, SweepStats* stats, bool update_xi) {
    const int V = state.num_nodes();
    const int K = state.num_communities();
    if (graph.num_nodes() != V) throw DomainError("graph and state disagree on V");
    auto& h = state.hyper;
    Rng rng = make_stream(seed, {sweep, 1});

    // (a) latent counts and (b) their partition over (k, k').
    // Observed edges draw a zero-truncated count; held-out entries are imputed
    // with an unconstrained Poisson count.
    const Eigen::MatrixXd B = state.omega * state.phi.transpose();  // K x V
    auto edges = graph.observed_edges();
    const auto n_edges = edges.size();
    for (auto p : graph.hidden_entries()) edges.push_back(p);
    struct Cell {
        int k;
        int kp;
        std::uint64_t n;
    };
    std::vector<std::vector<Cell>> units(edges.size());
    std::vector<std::string> errors(edges.size());
    const auto n_entries = static_cast<std::ptrdiff_t>(edges.size());

#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n_entries; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const auto [u, v] = edges[ui];
        Rng er = make_stream(seed, {sweep, 2, ui});
        std::vector<double> wk(static_cast<std::size_t>(K)), wkp(static_cast<std::size_t>(K));
        double zeta = 0.0;
        for (int k = 0; k < K; ++k) {
            wk[static_cast<std::size_t>(k)] = state.phi(u, k) * B(k, v);
            zeta += wk[static_cast<std::size_t>(k)];
        }
        if (!std::isfinite(zeta) || (ui < n_edges && !(zeta > 0.0))) {
            errors[ui] = "non-finite or zero edge rate " + std::to_string(zeta) + " at (" +
                         std::to_string(u) + "," + std::to_string(v) + ")";
            continue;
        }
        const std::uint64_t count = ui < n_edges ? sample_zero_truncated_poisson(zeta, er)
                                                 : sample_poisson(zeta, er);
        auto& out = units[ui];
        if (count <= static_cast<std::uint64_t>(K)) {
            for (std::uint64_t n = 0; n < count; ++n) {
                const int k = static_cast<int>(sample_categorical(wk, zeta, er));
                double tot = 0.0;
                for (int kp = 0; kp < K; ++kp) {
                    wkp[static_cast<std::size_t>(kp)] = state.omega(k, kp) * state.phi(v, kp);
                    tot += wkp[static_cast<std::size_t>(kp)];
                }
                out.push_back({k, static_cast<int>(sample_categorical(wkp, tot, er)), 1});
            }
            continue;
        }
        // large counts: multinomial over (k, k') as a chain of conditional binomials
        std::uint64_t left = count;
        double mass = zeta;
        for (int k = 0; k < K && left > 0; ++k) {
            for (int kp = 0; kp < K && left > 0; ++kp) {
                const double w = state.phi(u, k) * state.omega(k, kp) * state.phi(v, kp);
                const double p = mass > 0.0 ? std::clamp(w / mass, 0.0, 1.0) : 1.0;
                const std::uint64_t x =
                    p >= 1.0 ? left : std::binomial_distribution<std::uint64_t>(left, p)(er);
                if (x > 0) out.push_back({k, kp, x});
                left -= x;
                mass -= w;
            }
        }
        if (left > 0) out.back().n += left;
    }
    for (const auto& e : errors)
        if (!e.empty()) throw NumericalError("community sampler: " + e);

    Eigen::MatrixXd n_node = Eigen::MatrixXd::Zero(V, K);  // counts touching u through community k
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(K, K);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        for (const auto& c : units[i]) {
            const auto n = static_cast<double>(c.n);
            n_node(edges[i].src, c.k) += n;
            n_node(edges[i].dst, c.kp) += n;
            m(c.k, c.kp) += n;
            total += c.n;
        }
    }
    if (stats) {
        stats->latent_total = total;
        stats->partition_total = static_cast<std::uint64_t>(m.sum());
    }

    // (c) node-level updates. Marginalizing phi_{u,k} turns n_{u,k} into
    // NB(a_u, p_{u,k}); CRT tables l_{u,k} then give a conjugate gamma draw for a_u.
    Eigen::VectorXd s = state.phi.colwise().sum().transpose();
    for (int u = 0; u < V; ++u) {
        const Eigen::VectorXd s_minus = s - state.phi.row(u).transpose();
        const Eigen::VectorXd rate = state.omega * s_minus + state.omega.transpose() * s_minus;
        double tables = 0.0;
        double q = 0.0;
        for (int k = 0; k < K; ++k) {
            tables += static_cast<double>(
                sample_crt(static_cast<std::uint64_t>(n_node(u, k)), state.a(u), rng));
            q += std::log1p(rate(k) / state.c(u));
        }
        state.a(u) = gamma_floor(h.e0 + tables, 1.0 / (h.f0 + q), rng);
        for (int k = 0; k < K; ++k)
            state.phi(u, k) = gamma_floor(state.a(u) + n_node(u, k), 1.0 / (state.c(u) + rate(k)), rng);
        s = s_minus + state.phi.row(u).transpose();
        state.c(u) = gamma_floor(1.0 + K * state.a(u), 1.0 / (1.0 + state.phi.row(u).sum()), rng);
    }

    // Community weights: marginalizing Omega gives m_{k,k'} ~ NB(shape_{k,k'}, p_{k,k'}).
    const Eigen::MatrixXd cross = state.phi.transpose() * state.phi;
    Eigen::MatrixXd denom = s * s.transpose() - cross;
    denom = denom.cwiseMax(0.0);
    Eigen::MatrixXd L(K, K), l(K, K);
    for (int k = 0; k < K; ++k) {
        for (int kp = 0; kp < K; ++kp) {
            L(k, kp) = std::log1p(denom(k, kp) / h.chi);
            const double shape = k == kp ? h.xi * state.r(k) : state.r(k) * state.r(kp);
            l(k, kp) = static_cast<double>(sample_crt(static_cast<std::uint64_t>(m(k, kp)), shape, rng));
        }
    }
    for (int k = 0; k < K; ++k) {
        double shape = l(k, k);
        double rate = h.xi * L(k, k);
        for (int kp = 0; kp < K; ++kp) {
            if (kp == k) continue;
            shape += l(k, kp) + l(kp, k);
            rate += state.r(kp) * (L(k, kp) + L(kp, k));
        }
        state.r(k) = gamma_floor(h.r0 / K + shape, 1.0 / (h.c0 + rate), rng);
    }
    if (update_xi) {
        double diag_tables = 0.0;
        double diag_rate = 0.0;
        for (int k = 0; k < K; ++k) {
            diag_tables += l(k, k);
            diag_rate += state.r(k) * L(k, k);
        }
        h.xi = gamma_floor(1.0 + diag_tables, 1.0 / (1.0 + diag_rate), rng);
    }
    double shape_sum = 0.0;
    for (int k = 0; k < K; ++k) {
        for (int kp = 0; kp < K; ++kp) {
            const double shape = k == kp ? h.xi * state.r(k) : state.r(k) * state.r(kp);
            shape_sum += shape;
            state.omega(k, kp) = gamma_floor(shape + m(k, kp), 1.0 / (h.chi + denom(k, kp)), rng);
        }
    }
    h.chi = gamma_floor(1.0 + shape_sum, 1.0 / (1.0 + state.omega.sum()), rng);

    // Top-level shapes r0 and e0. Their lower-level variables cannot be
    // integrated out jointly (r_k and r_k' share Omega shapes, a_u and a_v
    // share counts), so these are slice moves on log x given r and a.
    {
        double sum_log_r = 0.0;
        for (int k = 0; k < K; ++k) sum_log_r += std::log(state.r(k));
        const double log_c0 = std::log(h.c0);
        auto logf = [&](double y) {
            const double x = std::exp(y);
            const double shape = x / K;
            return y - x + K * (shape * log_c0 - std::lgamma(shape)) + (shape - 1.0) * sum_log_r;
        };
        h.r0 = std::max(std::exp(slice_sample(logf, std::log(h.r0), 1.0, rng)), kFloor);
        h.c0 = gamma_floor(1.0 + h.r0, 1.0 / (1.0 + state.r.sum()), rng);
    }
    {
        double sum_log_a = 0.0;
        for (int u = 0; u < V; ++u) sum_log_a += std::log(state.a(u));
        const double log_f0 = std::log(h.f0);
        auto logf = [&](double y) {
            const double x = std::exp(y);
            return y - x + V * (x * log_f0 - std::lgamma(x)) + (x - 1.0) * sum_log_a;
        };
        h.e0 = std::max(std::exp(slice_sample(logf, std::log(h.e0), 1.0, rng)), kFloor);
        h.f0 = gamma_floor(1.0 + V * h.e0, 1.0 / (1.0 + state.a.sum()), rng);
    }
    return state;
}

double joint_log_density(const CommunityParams& params, const AggregatedGraph& graph) {
    const int V = params.num_nodes();
    const int K = params.num_communities();
    const auto& h = params.hyper;
    const Eigen::MatrixXd zeta = params.phi * params.omega * params.phi.transpose();
    double lp = 0.0;
    for (int u = 0; u < V; ++u) {
        for (int v = 0; v < V; ++v) {
            if (u == v || !graph.observed(u, v)) continue;
            lp += graph.edge(u, v) ? std::log(-std::expm1(-zeta(u, v))) : -zeta(u, v);
        }
    }
    for (int u = 0; u < V; ++u) {
        for (int k = 0; k < K; ++k) lp += log_gamma_density(params.phi(u, k), params.a(u), params.c(u));
        lp += log_gamma_density(params.a(u), h.e0, h.f0);
        lp -= params.c(u);
    }
    for (int k = 0; k < K; ++k) {
        lp += log_gamma_density(params.r(k), h.r0 / K, h.c0);
        for (int kp = 0; kp < K; ++kp) {
            const double shape = k == kp ? h.xi * params.r(k) : params.r(k) * params.r(kp);
            lp += log_gamma_density(params.omega(k, kp), shape, h.chi);
        }
    }
    lp -= h.c0 + h.e0 + h.f0 + h.r0 + h.xi + h.chi;
    return lp;
}

int count_active_communities(const Eigen::VectorXd& r, double rel) {
    if (r.size() == 0) return 0;
    const double cut = rel * r.maxCoeff();
    return static_cast<int>((r.array() > cut).count());
}

Eigen::VectorXd community_mass(const CommunityParams& params) {
    const Eigen::VectorXd s = params.phi.colwise().sum().transpose();
    const Eigen::MatrixXd D = (s * s.transpose() - params.phi.transpose() * params.phi).cwiseMax(0.0);
    const Eigen::MatrixXd flow = params.omega.cwiseProduct(D);
    return flow.rowwise().sum() + flow.colwise().sum().transpose();
}

namespace {

std::vector<int> retained(const CommunityParams& params, double rel) {
    const Eigen::VectorXd mass = community_mass(params);
    const double cut = rel * mass.maxCoeff();
    std::vector<int> keep;
    for (int k = 0; k < params.num_communities(); ++k)
        if (mass(k) > cut) keep.push_back(k);
    if (keep.empty()) {
        Eigen::Index best = 0;
        mass.maxCoeff(&best);
        keep.push_back(static_cast<int>(best));
    }
    return keep;
}

}  // namespace

CommunityParams prune_communities(const CommunityParams& params, double rel) {
    const auto keep = retained(params, rel);
    const auto Kn = static_cast<Eigen::Index>(keep.size());
    CommunityParams out = params;
    out.phi.resize(params.num_nodes(), Kn);
    out.omega.resize(Kn, Kn);
    out.r.resize(Kn);
    for (Eigen::Index i = 0; i < Kn; ++i) {
        out.phi.col(i) = params.phi.col(keep[static_cast<std::size_t>(i)]);
        out.r(i) = params.r(keep[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < Kn; ++j)
            out.omega(i, j) = params.omega(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
    }
    return out;
}

double map_score(const CommunityParams& params, const AggregatedGraph& graph) {
    const int V = params.num_nodes();
    const int K = params.num_communities();
    const auto& h = params.hyper;
    const Eigen::MatrixXd zeta = params.phi * params.omega * params.phi.transpose();
    double lp = 0.0;
    for (int u = 0; u < V; ++u) {
        for (int v = 0; v < V; ++v) {
            if (u == v || !graph.observed(u, v)) continue;
            lp += graph.edge(u, v) ? std::log(-std::expm1(-zeta(u, v))) : -zeta(u, v);
        }
    }
    const auto keep = retained(params, 0.01);
    for (int u = 0; u < V; ++u) {
        for (int k : keep) lp += log_gamma_density_log_scale(params.phi(u, k), params.a(u), params.c(u));
        lp += log_gamma_density_log_scale(params.a(u), h.e0, h.f0);
        lp += log_gamma_density_log_scale(params.c(u), 1.0, 1.0);
    }
    for (int k : keep) {
        lp += log_gamma_density_log_scale(params.r(k), h.r0 / K, h.c0);
        for (int kp : keep) {
            const double shape = k == kp ? h.xi * params.r(k) : params.r(k) * params.r(kp);
            lp += log_gamma_density_log_scale(params.omega(k, kp), shape, h.chi);
        }
    }
    for (double x : {h.c0, h.e0, h.f0, h.r0, h.xi, h.chi}) lp += log_gamma_density_log_scale(x, 1.0, 1.0);
    return lp;
}

StaticFit fit_map(const AggregatedGraph& graph, const StaticFitOptions& options) {
    if (options.sweeps < 1) throw DomainError("need at least one sweep");
    const int V = graph.num_nodes();
    StaticFit fit;
    fit.estimate = initial_community_state(std::max(V, 1), options.k_max, options.seed);
    if (graph.edge_count() == 0) {
        std::cerr << "warning: aggregated graph has no edges; returning prior-mean community parameters\n";
        auto& e = fit.estimate;
        e.phi.setOnes();
        e.omega = omega_prior_mean(e.r, e.hyper.xi, e.hyper.chi);
        fit.degenerate = true;
        fit.log_density = map_score(e, graph);
        return fit;
    }

    if (!(options.warmup_xi > 0.0) || !std::isfinite(options.warmup_xi))
        throw DomainError("warm-up xi must be positive");
    const int burn_in = options.sweeps / 2;
    const int warmup = burn_in / 2;
    CommunityParams state = fit.estimate;
    if (warmup > 0) state.hyper.xi = options.warmup_xi;
    CommunityParams sum;
    int n_kept = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 1; s <= options.sweeps; ++s) {
        state = gibbs_sweep(std::move(state), graph, options.seed, static_cast<std::uint64_t>(s), nullptr, s > warmup);
        const double lp = map_score(state, graph);
        if (!std::isfinite(lp))
            throw NumericalError("community MAP score not finite after sweep " + std::to_string(s));
        fit.log_density_trace.push_back(lp);
        fit.active_trace.push_back(count_active_communities(state.r));
        if (s <= burn_in) continue;
        if (options.posterior_mean) {
            if (n_kept == 0) {
                sum = state;
            } else {
                sum.phi += state.phi;
                sum.omega += state.omega;
                sum.r += state.r;
                sum.a += state.a;
                sum.c += state.c;
                sum.hyper.c0 += state.hyper.c0;
                sum.hyper.e0 += state.hyper.e0;
                sum.hyper.f0 += state.hyper.f0;
                sum.hyper.r0 += state.hyper.r0;
                sum.hyper.xi += state.hyper.xi;
                sum.hyper.chi += state.hyper.chi;
            }
            ++n_kept;
        } else if (lp > best) {
            best = lp;
            fit.estimate = state;
            fit.selected_sweep = s;
        }
    }
    if (options.posterior_mean) {
        const double inv = 1.0 / n_kept;
        sum.phi *= inv;
        sum.omega *= inv;
        sum.r *= inv;
        sum.a *= inv;
        sum.c *= inv;
        for (double* x : {&sum.hyper.c0, &sum.hyper.e0, &sum.hyper.f0, &sum.hyper.r0, &sum.hyper.xi, &sum.hyper.chi})
            *x *= inv;
        fit.estimate = sum;
        fit.selected_sweep = options.sweeps;
        best = map_score(sum, graph);
    }
    fit.log_density = best;
    return fit;
}

}  // namespace hepm
