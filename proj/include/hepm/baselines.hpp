#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hepm/event_core.hpp"
#include "hepm/hawkes_params.hpp"

namespace hepm {

/// Common query interface of all fitted models. Histories are frozen at the
/// training horizon; `t` must not precede it.
class LinkModel {
public:
    virtual ~LinkModel() = default;
    virtual std::string name() const = 0;
    virtual double intensity(NodeId u, NodeId v, double t) const = 0;
    /// int_t^{t + window} lambda_{u,v}(s) ds without excitation from events inside the window.
    virtual double window_integral(NodeId u, NodeId v, double t, double window) const = 0;
};

/// 1 - exp(-window_integral).
double link_probability(const LinkModel& model, NodeId u, NodeId v, double t, double window);

// ---------------------------------------------------------------- Poisson

class PoissonModel final : public LinkModel {
public:
    PoissonModel(const EventSequence& data, double smoothing);
    std::string name() const override { return "pp"; }
    double rate(NodeId u, NodeId v) const;
    double intensity(NodeId u, NodeId v, double t) const override;
    double window_integral(NodeId u, NodeId v, double t, double window) const override;
    double log_likelihood(const EventSequence& data) const;

private:
    double horizon_;
    double smoothing_;
    std::map<NodePair, std::uint32_t> counts_;
};

/// phi_{uv} = (count(u, v) + eps) / T.
PoissonModel fit_pp(const EventSequence& data, double smoothing = 0.01);

// -------------------------------------------- shared concave sub-problem

/// maximize sum_i log(theta^T g_i) - theta^T c over theta >= 0.
struct LinearIntensityProblem {
    int dim{0};
    std::vector<double> g;  // n x dim, row-major
    std::vector<double> c;

    std::size_t rows() const { return dim > 0 ? g.size() / static_cast<std::size_t>(dim) : 0; }
    double value(std::span<const double> theta) const;
    std::vector<double> gradient(std::span<const double> theta) const;
};

struct LinearIntensityFit {
    std::vector<double> theta;
    double value{0.0};
    /// Norm of the projected gradient at the returned point.
    double gradient_norm{0.0};
    int iterations{0};
};

/// Projected Newton with backtracking, started from a few multiplicative
/// (EM-type) updates. Stops when the projected gradient norm is below `tol`.
LinearIntensityFit solve_linear_intensity(const LinearIntensityProblem& problem,
                                          std::vector<double> theta0, double tol = 1e-6,
                                          int max_iter = 500);

// ----------------------------------------------------- multi-kernel MHP

/// gamma_1 = e^{-24t}, gamma_2 = e^{-t}, gamma_3 = e^{-t/7}, gamma_4 = e^{-t/7} sin^2(pi t/7); t in days.
std::array<double, 4> basis_kernels(double t);
/// Integrals of the basis kernels over [0, s].
std::array<double, 4> basis_integrals(double s);

class MhpModel final : public LinkModel {
public:
    MhpModel() = default;
    std::string name() const override { return "mhp"; }
    double intensity(NodeId u, NodeId v, double t) const override;
    double window_integral(NodeId u, NodeId v, double t, double window) const override;

    double phi{0.0};
    std::array<double, 4> beta{};
    double log_likelihood{0.0};
    double gradient_norm{0.0};

    /// Triggering state of excited pair (u, v) at the horizon: sums over (v -> u) events of
    /// e^{-24 s}, e^{-s}, e^{-s/7} and e^{z s}, z = -1/7 + 2 pi i / 7, with s = T - t_j.
    struct State {
        std::array<double, 3> real{};
        std::complex<double> wave{};
    };
    double horizon{0.0};
    std::map<NodePair, State> state;
};

/// Builds the 5-parameter problem (phi, beta_1..4) shared by all pairs.
LinearIntensityProblem mhp_problem(const EventSequence& data);
MhpModel fit_mhp(const EventSequence& data);

// ------------------------------------------------------- block models

/// k-means++ on row-normalized [U_k, V_k] from the SVD of the binary adjacency.
std::vector<int> spectral_clustering(const EventSequence& data, int k, std::uint64_t seed,
                                     int restarts = 10);

struct BlockHawkesParams {
    double phi{0.0};
    double alpha{0.0};
    double decay{1.0};  // time scale of exp(-dt / decay)
    double log_likelihood{0.0};
    bool fallback{false};
};

class BlockHawkesModel final : public LinkModel {
public:
    enum class Kind { chip, sbm };
    std::string name() const override { return kind == Kind::chip ? "chip" : "hawkes_sbm"; }
    double intensity(NodeId u, NodeId v, double t) const override;
    double window_integral(NodeId u, NodeId v, double t, double window) const override;

    Kind kind{Kind::chip};
    int k{1};
    std::vector<int> labels;
    std::vector<int> block_size;
    /// k x k, row-major by (c_u, c_v).
    std::vector<BlockHawkesParams> blocks;
    double horizon{0.0};
    /// CHIP: per excited pair (u, v), sum over (v -> u) events of exp(-(T - t_j)/decay).
    std::map<NodePair, double> pair_state;
    /// Hawkes-SBM: per block pair (a, b), sum over (b -> a) events.
    std::vector<double> block_state;

    const BlockHawkesParams& block(NodeId u, NodeId v) const;
    double pairs_in_block(int a, int b) const;
};

/// Spectral labels, then a per-block exponential Hawkes MLE (decay by grid plus
/// golden-section search, (phi, alpha) by the concave solver). Block pairs with
/// no target events use the global fit.
BlockHawkesModel fit_blockmodel(const EventSequence& data, int k, BlockHawkesModel::Kind kind,
                                std::uint64_t seed);
BlockHawkesModel fit_blockmodel(const EventSequence& data, std::vector<int> labels, int k,
                                BlockHawkesModel::Kind kind);

}  // namespace hepm
