#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "hepm/event_core.hpp"
#include "hepm/hawkes_params.hpp"

namespace hepm {

/// Events of one unordered node pair {a, b}, a < b, in time order.
///
/// An event only excites the opposite direction of its own pair, so blocks
/// are conditionally independent given the parameters. This is what makes
/// the per-block loop data-parallel.
struct PairBlock {
    NodePair pair;
    std::vector<std::uint32_t> events;
    /// Index into PairBlocks::active_pairs() for (a,b) and (b,a); -1 when that direction is empty.
    std::array<int, 2> active{-1, -1};
};

class PairBlocks {
public:
    explicit PairBlocks(const EventSequence& data);

    const std::vector<PairBlock>& blocks() const { return blocks_; }
    /// Sorted directed pairs with at least one event.
    const std::vector<NodePair>& active_pairs() const { return active_; }
    std::optional<std::size_t> active_index(NodePair pair) const;
    /// Number of events of each active pair.
    const std::vector<std::uint32_t>& counts() const { return counts_; }

private:
    std::vector<PairBlock> blocks_;
    std::vector<NodePair> active_;
    std::vector<std::uint32_t> counts_;
};

enum class TagMode {
    /// Tags are responsibilities under the current parameters (EM).
    soft,
    /// Tags taken from a given assignment (hard or soft).
    fixed,
    /// Tags drawn from the branching conditionals (Gibbs).
    sample,
};

struct PassOptions {
    TagMode mode{TagMode::soft};
    const LatentAssignment* fixed{nullptr};
    /// Receives responsibilities (soft) or draws (sample); sized to the data.
    LatentAssignment* record{nullptr};
    const CovariateMatrix* covs{nullptr};
    std::uint64_t seed{0};
    std::uint64_t iteration{0};
    bool pair_stats{true};
    bool event_intensity{false};
    bool horizon_state{false};
    bool parallel{true};
};

struct PassResult {
    /// sum_i log lambda_{s_i,d_i}(t_i)
    double log_intensity{0.0};
    /// sum_j sum_p alpha_p w_j(rev p) delta (1 - exp(-(T - t_j)/delta))
    double excitation_mass{0.0};
    /// trigger_mass[p]: the factor multiplying alpha_p in excitation_mass.
    std::vector<double> trigger_mass;
    /// Per active pair, K^2 each: expected (soft) or counted (hard) exogenous / endogenous events.
    std::vector<double> m_hat;
    std::vector<double> m_check;
    std::vector<double> event_intensity;
    /// Excited pair (u,v) -> K^2 tag mass of past (v,u) events decayed to the horizon.
    std::map<NodePair, std::vector<double>> horizon_state;
};

/// Recursive O(N K^2) pass over all pair blocks, OpenMP-parallel across blocks.
///
/// Events sharing a timestamp do not excite each other. Reductions run in
/// block order, so results are identical for any thread count.
PassResult forward_pass(const HawkesParams& params, const EventSequence& data,
                        const PairBlocks& blocks, const PassOptions& options);

/// Serial O(N^2 K^2) reference: every intensity is a direct sum over all
/// earlier opposite-direction events. Kept for testing the recursive pass.
PassResult forward_pass_reference(const HawkesParams& params, const EventSequence& data,
                                  const PairBlocks& blocks, const PassOptions& options);

}  // namespace hepm
