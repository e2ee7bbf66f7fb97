#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "hepm/common.hpp"

namespace hepm {

/// A directed interaction from `src` to `dst` at time `t`.
struct Event {
    double t{0.0};
    NodeId src{0};
    NodeId dst{0};
};

/// Time-ordered directed events on nodes [0, V) observed over [0, T].
///
/// Construction sorts stably by time, so events sharing a timestamp keep
/// their input order. Self-edges, out-of-range nodes and times outside
/// [0, T] are rejected.
class EventSequence {
public:
    EventSequence() = default;
    EventSequence(std::vector<Event> events, double horizon, int node_count);

    const std::vector<Event>& events() const { return events_; }
    const Event& operator[](std::size_t i) const { return events_[i]; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }
    double horizon() const { return horizon_; }
    int node_count() const { return node_count_; }

    auto begin() const { return events_.begin(); }
    auto end() const { return events_.end(); }

    /// First n events, observed over [0, horizon].
    EventSequence prefix(std::size_t n, double horizon) const;

private:
    std::vector<Event> events_;
    double horizon_{1.0};
    int node_count_{0};
};

/// Exponential triggering kernel alpha * exp(-dt / delta); delta is a time scale.
struct ExpKernel {
    double alpha{0.0};
    double delta{1.0};

    ExpKernel() = default;
    ExpKernel(double alpha, double delta);

    /// Branching ratio alpha * delta < 1. Queried, never enforced.
    bool stationary() const { return alpha * delta < 1.0; }
};

double kernel_value(const ExpKernel& kernel, double dt);

/// Integral of the kernel triggered at t_j over [max(from, t_j), to].
double kernel_compensator(const ExpKernel& kernel, double t_j, double from, double to);

/// Event times per ordered pair, optionally split by latent pattern.
///
/// With tags, `tagged_times(pair, p)` lists the events of `pair` carrying
/// pattern p; the union over p equals `times(pair)`.
class DirectedPairHistory {
public:
    /// `patterns`, when non-empty, holds one flattened pattern index per event.
    DirectedPairHistory(const EventSequence& data, int num_communities,
                        std::span<const int> patterns = {});

    std::span<const double> times(NodePair pair) const;
    std::span<const double> tagged_times(NodePair pair, int pattern) const;

    bool tagged() const { return tagged_; }
    int num_communities() const { return K_; }
    const std::map<NodePair, std::vector<double>>& pairs() const { return times_; }

private:
    int K_;
    bool tagged_;
    std::map<NodePair, std::vector<double>> times_;
    std::map<NodePair, std::vector<std::vector<double>>> by_pattern_;
};

}  // namespace hepm
