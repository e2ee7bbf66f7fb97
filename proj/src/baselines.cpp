#include "hepm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hepm/forward_pass.hpp"
#include "hepm/random.hpp"

namespace hepm {

double link_probability(const LinkModel& model, NodeId u, NodeId v, double t, double window) {
    if (!(window >= 0.0)) throw DomainError("prediction window must be nonnegative");
    const double integral = model.window_integral(u, v, t, window);
    return -std::expm1(-std::max(integral, 0.0));
}

// ---------------------------------------------------------------- Poisson

PoissonModel::PoissonModel(const EventSequence& data, double smoothing)
    : horizon_(data.horizon()), smoothing_(smoothing) {
    if (!(smoothing >= 0.0)) throw DomainError("smoothing must be nonnegative");
    for (const auto& e : data) ++counts_[{e.src, e.dst}];
}

double PoissonModel::rate(NodeId u, NodeId v) const {
    auto it = counts_.find({u, v});
    const double n = it == counts_.end() ? 0.0 : it->second;
    return (n + smoothing_) / horizon_;
}

double PoissonModel::intensity(NodeId u, NodeId v, double) const { return rate(u, v); }

double PoissonModel::window_integral(NodeId u, NodeId v, double, double window) const {
    return rate(u, v) * window;
}

double PoissonModel::log_likelihood(const EventSequence& data) const {
    double ll = 0.0;
    for (const auto& e : data) ll += std::log(rate(e.src, e.dst));
    const double V = data.node_count();
    double total = 0.0;
    for (const auto& [pair, n] : counts_) total += n;
    return ll - (total + smoothing_ * V * (V - 1.0));
}

PoissonModel fit_pp(const EventSequence& data, double smoothing) { return PoissonModel(data, smoothing); }

// -------------------------------------------- shared concave sub-problem

double LinearIntensityProblem::value(std::span<const double> theta) const {
    const auto m = static_cast<std::size_t>(dim);
    double v = 0.0;
    for (std::size_t i = 0; i < rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += theta[j] * g[i * m + j];
        if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
        v += std::log(s);
    }
    for (std::size_t j = 0; j < m; ++j) v -= theta[j] * c[j];
    return v;
}

std::vector<double> LinearIntensityProblem::gradient(std::span<const double> theta) const {
    const auto m = static_cast<std::size_t>(dim);
    std::vector<double> grad(m, 0.0);
    for (std::size_t i = 0; i < rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += theta[j] * g[i * m + j];
        for (std::size_t j = 0; j < m; ++j) grad[j] += g[i * m + j] / s;
    }
    for (std::size_t j = 0; j < m; ++j) grad[j] -= c[j];
    return grad;
}

namespace {

double projected_norm(std::span<const double> theta, std::span<const double> grad) {
    double s = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double pg = theta[j] > 0.0 ? grad[j] : std::max(grad[j], 0.0);
        s += pg * pg;
    }
    return std::sqrt(s);
}

}  // namespace

LinearIntensityFit solve_linear_intensity(const LinearIntensityProblem& problem,
                                          std::vector<double> theta0, double tol, int max_iter) {
    const auto m = static_cast<std::size_t>(problem.dim);
    const std::size_t n = problem.rows();
    if (theta0.size() != m || problem.c.size() != m) throw DomainError("solver dimension mismatch");

    // Dimensions that never appear in g carry no likelihood; their optimum is 0
    // when c > 0 and the problem is unbounded otherwise.
    std::vector<double> colsum(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) colsum[j] += problem.g[i * m + j];
    std::vector<bool> fixed(m, false);
    for (std::size_t j = 0; j < m; ++j) {
        if (colsum[j] > 0.0 && !(problem.c[j] > 0.0))
            throw NumericalError("linear-intensity problem is unbounded in coordinate " + std::to_string(j));
        if (colsum[j] == 0.0) {
            fixed[j] = true;
            theta0[j] = 0.0;
        } else if (!(theta0[j] > 0.0)) {
            theta0[j] = colsum[j] / (problem.c[j] * static_cast<double>(m));
        }
    }

    LinearIntensityFit fit;
    std::vector<double> theta = std::move(theta0);
    if (n == 0) {
        std::fill(theta.begin(), theta.end(), 0.0);
        fit.theta = theta;
        fit.value = 0.0;
        return fit;
    }
    // multiplicative updates keep theta > 0 and increase the objective
    for (int it = 0; it < 20; ++it) {
        std::vector<double> num(m, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += theta[j] * problem.g[i * m + j];
            for (std::size_t j = 0; j < m; ++j) num[j] += theta[j] * problem.g[i * m + j] / s;
        }
        for (std::size_t j = 0; j < m; ++j)
            if (!fixed[j]) theta[j] = num[j] / problem.c[j];
    }

    double value = problem.value(theta);
    if (!std::isfinite(value)) throw NumericalError("linear-intensity objective is not finite at the start");
    int it = 0;
    for (; it < max_iter; ++it) {
        auto grad = problem.gradient(theta);
        for (std::size_t j = 0; j < m; ++j)
            if (fixed[j]) grad[j] = 0.0;
        if (projected_norm(theta, grad) < tol) break;

        // coordinates sitting near the bound with the gradient pushing into it are
        // sent straight to zero, Newton acts on the rest
        double eps = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double r = theta[j] - std::max(theta[j] + grad[j], 0.0);
            eps += r * r;
        }
        eps = std::min(1e-6, std::sqrt(eps));
        std::vector<std::size_t> free;
        std::vector<std::size_t> binding;
        for (std::size_t j = 0; j < m; ++j) {
            if (fixed[j]) continue;
            if (theta[j] <= eps && grad[j] <= 0.0) {
                if (theta[j] > 0.0) binding.push_back(j);
            } else {
                free.push_back(j);
            }
        }
        const auto f = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(f, f);
        Eigen::VectorXd gf(f);
        for (Eigen::Index a = 0; a < f; ++a) gf(a) = grad[free[static_cast<std::size_t>(a)]];
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += theta[j] * problem.g[i * m + j];
            const double w = 1.0 / (s * s);
            for (Eigen::Index a = 0; a < f; ++a) {
                const double ga = problem.g[i * m + free[static_cast<std::size_t>(a)]];
                if (ga == 0.0) continue;
                for (Eigen::Index b = 0; b < f; ++b)
                    H(a, b) += w * ga * problem.g[i * m + free[static_cast<std::size_t>(b)]];
            }
        }
        if (f > 0) H.diagonal().array() += 1e-12 * (H.diagonal().maxCoeff() + 1.0);
        Eigen::VectorXd newton = H.ldlt().solve(gf);
        if (!newton.allFinite() || newton.dot(gf) <= 0.0) newton = gf;

        auto search = [&](const Eigen::VectorXd& d) {
            for (double step = 1.0; step > 1e-20; step *= 0.5) {
                std::vector<double> cand = theta;
                for (Eigen::Index a = 0; a < f; ++a) {
                    const auto j = free[static_cast<std::size_t>(a)];
                    cand[j] = std::max(theta[j] + step * d(a), 0.0);
                }
                for (auto j : binding) cand[j] = 0.0;
                const double cv = problem.value(cand);
                if (cv > value || (cv == value && !binding.empty())) {
                    theta = std::move(cand);
                    value = cv;
                    return true;
                }
            }
            return false;
        };
        bool improved = search(newton);
        if (!improved) {
            // projected gradient, scaled by the inverse Hessian diagonal
            Eigen::VectorXd d = gf.array() / H.diagonal().array();
            improved = search(d);
        }
        if (!improved) break;
    }
    auto grad = problem.gradient(theta);
    for (std::size_t j = 0; j < m; ++j)
        if (fixed[j]) grad[j] = 0.0;
    fit.theta = std::move(theta);
    fit.value = value;
    fit.gradient_norm = projected_norm(fit.theta, grad);
    fit.iterations = it;
    return fit;
}

// ----------------------------------------------------- multi-kernel MHP

namespace {

constexpr double kRates[3] = {24.0, 1.0, 1.0 / 7.0};
const std::complex<double> kWave{-1.0 / 7.0, 2.0 * std::numbers::pi / 7.0};

struct MhpTrack {
    std::array<double, 3> real{};
    std::complex<double> wave{};

    void decay(double dt) {
        for (int b = 0; b < 3; ++b) real[static_cast<std::size_t>(b)] *= std::exp(-kRates[b] * dt);
        wave *= std::exp(kWave * dt);
    }
    void add() {
        for (auto& x : real) x += 1.0;
        wave += 1.0;
    }
    std::array<double, 4> values() const {
        return {real[0], real[1], real[2], 0.5 * real[2] - 0.5 * wave.real()};
    }
};

/// Walks every pair block in time order, calling on_target(event, track of
/// its direction) before same-time events are added as triggers. Returns the
/// tracks of each direction decayed to the horizon.
template <typename F>
void walk_pairs(const EventSequence& data, F&& on_target, std::map<NodePair, MhpTrack>* final_state) {
    const PairBlocks blocks(data);
    const double T = data.horizon();
    for (const auto& blk : blocks.blocks()) {
        std::array<MhpTrack, 2> track;  // track[d] excites direction d
        double t_ref = 0.0;
        const auto& ev = blk.events;
        std::size_t g = 0;
        while (g < ev.size()) {
            const double t = data[ev[g]].t;
            std::size_t h = g;
            while (h < ev.size() && data[ev[h]].t == t) ++h;
            for (auto& tr : track) tr.decay(t - t_ref);
            t_ref = t;
            for (std::size_t i = g; i < h; ++i) {
                const int dir = data[ev[i]].src == blk.pair.src ? 0 : 1;
                on_target(ev[i], track[static_cast<std::size_t>(dir)]);
            }
            for (std::size_t i = g; i < h; ++i) {
                const int dir = data[ev[i]].src == blk.pair.src ? 0 : 1;
                track[static_cast<std::size_t>(1 - dir)].add();
            }
            g = h;
        }
        if (final_state) {
            for (int d = 0; d < 2; ++d) {
                auto tr = track[static_cast<std::size_t>(d)];
                tr.decay(T - t_ref);
                if (tr.real[0] == 0.0 && tr.real[1] == 0.0 && tr.real[2] == 0.0 && tr.wave == 0.0) continue;
                final_state->emplace(d == 0 ? blk.pair : blk.pair.reversed(), tr);
            }
        }
    }
}

}  // namespace

std::array<double, 4> basis_kernels(double t) {
    const double s = std::sin(std::numbers::pi * t / 7.0);
    return {std::exp(-24.0 * t), std::exp(-t), std::exp(-t / 7.0), std::exp(-t / 7.0) * s * s};
}

std::array<double, 4> basis_integrals(double s) {
    const double e7 = -7.0 * std::expm1(-s / 7.0);
    const std::complex<double> w = (std::exp(kWave * s) - 1.0) / kWave;
    return {-std::expm1(-24.0 * s) / 24.0, -std::expm1(-s), e7, 0.5 * e7 - 0.5 * w.real()};
}

LinearIntensityProblem mhp_problem(const EventSequence& data) {
    LinearIntensityProblem prob;
    prob.dim = 5;
    prob.g.assign(data.size() * 5, 0.0);
    walk_pairs(
        data,
        [&](std::uint32_t idx, const MhpTrack& tr) {
            auto v = tr.values();
            double* row = prob.g.data() + static_cast<std::size_t>(idx) * 5;
            row[0] = 1.0;
            for (int b = 0; b < 4; ++b) row[b + 1] = v[static_cast<std::size_t>(b)];
        },
        nullptr);
    const double V = data.node_count();
    prob.c.assign(5, 0.0);
    prob.c[0] = data.horizon() * V * (V - 1.0);
    for (const auto& e : data) {
        auto I = basis_integrals(data.horizon() - e.t);
        for (int b = 0; b < 4; ++b) prob.c[static_cast<std::size_t>(b + 1)] += I[static_cast<std::size_t>(b)];
    }
    return prob;
}

MhpModel fit_mhp(const EventSequence& data) {
    if (data.empty()) throw DomainError("MHP fit needs at least one event");
    if (data.node_count() < 2) throw DomainError("MHP fit needs at least two nodes");
    auto prob = mhp_problem(data);
    const double phi0 = static_cast<double>(data.size()) / prob.c[0];
    auto sol = solve_linear_intensity(prob, {phi0, 0.1, 0.1, 0.1, 0.1});
    if (!std::isfinite(sol.value)) throw NumericalError("MHP likelihood is not finite");
    MhpModel model;
    model.phi = sol.theta[0];
    for (int b = 0; b < 4; ++b) model.beta[static_cast<std::size_t>(b)] = sol.theta[static_cast<std::size_t>(b + 1)];
    model.log_likelihood = sol.value;
    model.gradient_norm = sol.gradient_norm;
    model.horizon = data.horizon();
    std::map<NodePair, MhpTrack> final_state;
    walk_pairs(data, [](std::uint32_t, const MhpTrack&) {}, &final_state);
    for (auto& [pair, tr] : final_state) model.state[pair] = {tr.real, tr.wave};
    return model;
}

double MhpModel::intensity(NodeId u, NodeId v, double t) const {
    if (t < horizon) throw DomainError("MHP queries must not precede the training horizon");
    double lam = phi;
    auto it = state.find({u, v});
    if (it == state.end()) return lam;
    MhpTrack tr{it->second.real, it->second.wave};
    tr.decay(t - horizon);
    auto vals = tr.values();
    for (int b = 0; b < 4; ++b) lam += beta[static_cast<std::size_t>(b)] * vals[static_cast<std::size_t>(b)];
    return lam;
}

double MhpModel::window_integral(NodeId u, NodeId v, double t, double window) const {
    if (t < horizon) throw DomainError("MHP queries must not precede the training horizon");
    double total = phi * window;
    auto it = state.find({u, v});
    if (it == state.end()) return total;
    MhpTrack tr{it->second.real, it->second.wave};
    tr.decay(t - horizon);
    const double e7 = -7.0 * std::expm1(-window / 7.0);
    total += beta[0] * tr.real[0] * (-std::expm1(-24.0 * window) / 24.0);
    total += beta[1] * tr.real[1] * (-std::expm1(-window));
    total += beta[2] * tr.real[2] * e7;
    const std::complex<double> w = tr.wave * (std::exp(kWave * window) - 1.0) / kWave;
    total += beta[3] * (0.5 * tr.real[2] * e7 - 0.5 * w.real());
    return total;
}

// ------------------------------------------------------- block models

std::vector<int> spectral_clustering(const EventSequence& data, int k, std::uint64_t seed, int restarts) {
    const int V = data.node_count();
    if (k < 1) throw DomainError("need k >= 1 clusters");
    if (V == 0) return {};
    k = std::min(k, V);
    if (k == 1) return std::vector<int>(static_cast<std::size_t>(V), 0);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(V, V);
    for (const auto& e : data) A(e.src, e.dst) = 1.0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd X(V, 2 * k);
    X.leftCols(k) = svd.matrixU().leftCols(k);
    X.rightCols(k) = svd.matrixV().leftCols(k);
    for (int u = 0; u < V; ++u) {
        const double nrm = X.row(u).norm();
        if (nrm > 0.0) X.row(u) /= nrm;
    }

    Rng rng = make_stream(seed, {0x6b6du});
    std::vector<int> best;
    double best_inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(restarts, 1); ++r) {
        // k-means++ seeding
        Eigen::MatrixXd C(k, X.cols());
        std::uniform_int_distribution<int> first(0, V - 1);
        C.row(0) = X.row(first(rng));
        std::vector<double> d2(static_cast<std::size_t>(V));
        for (int c = 1; c < k; ++c) {
            double total = 0.0;
            for (int u = 0; u < V; ++u) {
                double m = std::numeric_limits<double>::infinity();
                for (int j = 0; j < c; ++j) m = std::min(m, (X.row(u) - C.row(j)).squaredNorm());
                d2[static_cast<std::size_t>(u)] = m;
                total += m;
            }
            const int pick = total > 0.0 ? static_cast<int>(sample_categorical(d2, total, rng)) : first(rng);
            C.row(c) = X.row(pick);
        }
        std::vector<int> label(static_cast<std::size_t>(V), -1);
        double inertia = 0.0;
        for (int it = 0; it < 100; ++it) {
            bool changed = false;
            inertia = 0.0;
            for (int u = 0; u < V; ++u) {
                int arg = 0;
                double m = std::numeric_limits<double>::infinity();
                for (int j = 0; j < k; ++j) {
                    const double dist = (X.row(u) - C.row(j)).squaredNorm();
                    if (dist < m) {
                        m = dist;
                        arg = j;
                    }
                }
                inertia += m;
                if (label[static_cast<std::size_t>(u)] != arg) {
                    label[static_cast<std::size_t>(u)] = arg;
                    changed = true;
                }
            }
            if (!changed) break;
            Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, X.cols());
            std::vector<int> count(static_cast<std::size_t>(k), 0);
            for (int u = 0; u < V; ++u) {
                sum.row(label[static_cast<std::size_t>(u)]) += X.row(u);
                ++count[static_cast<std::size_t>(label[static_cast<std::size_t>(u)])];
            }
            for (int j = 0; j < k; ++j)
                if (count[static_cast<std::size_t>(j)] > 0) C.row(j) = sum.row(j) / count[static_cast<std::size_t>(j)];
        }
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best = label;
        }
    }
    // relabel by first appearance so labels do not depend on center order
    std::vector<int> remap(static_cast<std::size_t>(k), -1);
    int next = 0;
    for (auto& l : best) {
        auto& m = remap[static_cast<std::size_t>(l)];
        if (m < 0) m = next++;
        l = m;
    }
    return best;
}

namespace {

/// Target events of one excited process and the events that excite it, both in time order.
struct Track {
    std::vector<double> targets;
    std::vector<double> triggers;
};

struct BlockData {
    std::vector<Track> tracks;
    double base_exposure{0.0};  // multiplies phi in the compensator
    std::size_t n_targets{0};
    std::size_t n_triggers{0};
};

LinearIntensityProblem block_problem(const BlockData& bd, double decay, double horizon) {
    LinearIntensityProblem prob;
    prob.dim = 2;
    prob.g.reserve(bd.n_targets * 2);
    double trig = 0.0;
    for (const auto& tr : bd.tracks) {
        double R = 0.0;
        double t_ref = 0.0;
        std::size_t j = 0;
        for (double t : tr.targets) {
            while (j < tr.triggers.size() && tr.triggers[j] < t) {
                R = R * std::exp(-(tr.triggers[j] - t_ref) / decay) + 1.0;
                t_ref = tr.triggers[j];
                ++j;
            }
            prob.g.push_back(1.0);
            prob.g.push_back(R * std::exp(-(t - t_ref) / decay));
        }
        for (double t : tr.triggers) trig += -decay * std::expm1(-(horizon - t) / decay);
    }
    prob.c = {bd.base_exposure, trig};
    return prob;
}

BlockHawkesParams fit_block(const BlockData& bd, double horizon) {
    BlockHawkesParams out;
    if (bd.n_targets == 0) return out;
    if (bd.n_triggers == 0) {
        out.phi = static_cast<double>(bd.n_targets) / bd.base_exposure;
        out.log_likelihood = static_cast<double>(bd.n_targets) * (std::log(out.phi) - 1.0);
        return out;
    }
    const double phi0 = static_cast<double>(bd.n_targets) / bd.base_exposure;
    auto profile = [&](double log_decay, BlockHawkesParams* keep) {
        const double decay = std::exp(log_decay);
        auto sol = solve_linear_intensity(block_problem(bd, decay, horizon), {phi0, 0.1 / decay}, 1e-8, 200);
        if (keep) {
            keep->phi = sol.theta[0];
            keep->alpha = sol.theta[1];
            keep->decay = decay;
            keep->log_likelihood = sol.value;
        }
        return sol.value;
    };
    const double lo = std::log(horizon * 1e-6);
    const double hi = std::log(horizon);
    constexpr int grid = 24;
    std::vector<double> vals(grid + 1);
    int arg = 0;
    for (int i = 0; i <= grid; ++i) {
        vals[static_cast<std::size_t>(i)] = profile(lo + (hi - lo) * i / grid, nullptr);
        if (vals[static_cast<std::size_t>(i)] > vals[static_cast<std::size_t>(arg)]) arg = i;
    }
    double a = lo + (hi - lo) * std::max(arg - 1, 0) / grid;
    double b = lo + (hi - lo) * std::min(arg + 1, grid) / grid;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = profile(x1, nullptr);
    double f2 = profile(x2, nullptr);
    for (int it = 0; it < 40; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = profile(x2, nullptr);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = profile(x1, nullptr);
        }
    }
    double best_x = f1 > f2 ? x1 : x2;
    if (vals[static_cast<std::size_t>(arg)] > std::max(f1, f2)) best_x = lo + (hi - lo) * arg / grid;
    profile(best_x, &out);
    return out;
}

}  // namespace

const BlockHawkesParams& BlockHawkesModel::block(NodeId u, NodeId v) const {
    return blocks[static_cast<std::size_t>(labels[static_cast<std::size_t>(u)] * k + labels[static_cast<std::size_t>(v)])];
}

double BlockHawkesModel::pairs_in_block(int a, int b) const {
    const double na = block_size[static_cast<std::size_t>(a)];
    const double nb = block_size[static_cast<std::size_t>(b)];
    return a == b ? na * (na - 1.0) : na * nb;
}

double BlockHawkesModel::intensity(NodeId u, NodeId v, double t) const {
    if (t < horizon) throw DomainError("block-model queries must not precede the training horizon");
    const auto& p = block(u, v);
    const double f = std::exp(-(t - horizon) / p.decay);
    if (kind == Kind::sbm && !p.fallback) {
        const int a = labels[static_cast<std::size_t>(u)];
        const int b = labels[static_cast<std::size_t>(v)];
        const double lam = p.phi + p.alpha * block_state[static_cast<std::size_t>(a * k + b)] * f;
        return lam / pairs_in_block(a, b);
    }
    auto it = pair_state.find({u, v});
    return p.phi + (it == pair_state.end() ? 0.0 : p.alpha * it->second * f);
}

double BlockHawkesModel::window_integral(NodeId u, NodeId v, double t, double window) const {
    if (t < horizon) throw DomainError("block-model queries must not precede the training horizon");
    const auto& p = block(u, v);
    const double f = std::exp(-(t - horizon) / p.decay) * -p.decay * std::expm1(-window / p.decay);
    if (kind == Kind::sbm && !p.fallback) {
        const int a = labels[static_cast<std::size_t>(u)];
        const int b = labels[static_cast<std::size_t>(v)];
        const double integral = p.phi * window + p.alpha * block_state[static_cast<std::size_t>(a * k + b)] * f;
        return integral / pairs_in_block(a, b);
    }
    auto it = pair_state.find({u, v});
    return p.phi * window + (it == pair_state.end() ? 0.0 : p.alpha * it->second * f);
}

BlockHawkesModel fit_blockmodel(const EventSequence& data, int k, BlockHawkesModel::Kind kind,
                                std::uint64_t seed) {
    auto labels = spectral_clustering(data, k, seed);
    return fit_blockmodel(data, std::move(labels), std::min(k, std::max(data.node_count(), 1)), kind);
}

BlockHawkesModel fit_blockmodel(const EventSequence& data, std::vector<int> labels, int k,
                                BlockHawkesModel::Kind kind) {
    const int V = data.node_count();
    if (k < 1) throw DomainError("need k >= 1 blocks");
    if (static_cast<int>(labels.size()) != V) throw DomainError("need one label per node");
    const double T = data.horizon();
    BlockHawkesModel model;
    model.kind = kind;
    model.k = k;
    model.labels = std::move(labels);
    model.block_size.assign(static_cast<std::size_t>(k), 0);
    for (int l : model.labels) {
        if (l < 0 || l >= k) throw DomainError("label out of range");
        ++model.block_size[static_cast<std::size_t>(l)];
    }
    model.horizon = T;
    const auto uk = static_cast<std::size_t>(k);
    auto lab = [&](NodeId u) { return model.labels[static_cast<std::size_t>(u)]; };

    // Per directed pair tracks (CHIP and the global fallback).
    std::map<NodePair, Track> pair_tracks;
    for (const auto& e : data) {
        pair_tracks[{e.src, e.dst}].targets.push_back(e.t);
        pair_tracks[{e.dst, e.src}].triggers.push_back(e.t);
    }
    BlockData global;
    global.base_exposure = T * static_cast<double>(V) * (V - 1.0);
    for (auto& [pair, tr] : pair_tracks) {
        global.n_targets += tr.targets.size();
        global.n_triggers += tr.triggers.size();
        global.tracks.push_back(tr);
    }
    BlockHawkesParams global_fit = fit_block(global, T);
    global_fit.fallback = true;

    std::vector<BlockData> per_block(uk * uk);
    if (kind == BlockHawkesModel::Kind::chip) {
        for (auto& [pair, tr] : pair_tracks) {
            auto& bd = per_block[static_cast<std::size_t>(lab(pair.src) * k + lab(pair.dst))];
            bd.n_targets += tr.targets.size();
            bd.n_triggers += tr.triggers.size();
            bd.tracks.push_back(tr);
        }
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b)
                per_block[static_cast<std::size_t>(a * k + b)].base_exposure = T * model.pairs_in_block(a, b);
    } else {
        for (auto& bd : per_block) {
            bd.tracks.resize(1);
            bd.base_exposure = T;
        }
        for (const auto& e : data) {
            const int a = lab(e.src);
            const int b = lab(e.dst);
            auto& own = per_block[static_cast<std::size_t>(a * k + b)];
            own.tracks[0].targets.push_back(e.t);
            ++own.n_targets;
            auto& rev = per_block[static_cast<std::size_t>(b * k + a)];
            rev.tracks[0].triggers.push_back(e.t);
            ++rev.n_triggers;
        }
    }
    model.blocks.resize(uk * uk);
    for (std::size_t i = 0; i < uk * uk; ++i)
        model.blocks[i] = per_block[i].n_targets == 0 ? global_fit : fit_block(per_block[i], T);

    // Horizon states.
    for (auto& [pair, tr] : pair_tracks) {
        const auto& p = model.block(pair.src, pair.dst);
        double s = 0.0;
        for (double t : tr.triggers) s += std::exp(-(T - t) / p.decay);
        if (s > 0.0) model.pair_state[pair] = s;
    }
    model.block_state.assign(uk * uk, 0.0);
    if (kind == BlockHawkesModel::Kind::sbm) {
        for (const auto& e : data) {
            const int a = lab(e.dst);
            const int b = lab(e.src);
            const auto& p = model.blocks[static_cast<std::size_t>(a * k + b)];
            model.block_state[static_cast<std::size_t>(a * k + b)] += std::exp(-(T - e.t) / p.decay);
        }
    }
    return model;
}

}  // namespace hepm
