#include "hepm/event_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hepm {

EventSequence::EventSequence(std::vector<Event> events, double horizon, int node_count)
    : events_(std::move(events)), horizon_(horizon), node_count_(node_count) {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
        throw DomainError("event horizon must be positive and finite");
    if (node_count_ < 0) throw DomainError("node count must be nonnegative");
    std::stable_sort(events_.begin(), events_.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    for (std::size_t i = 0; i < events_.size(); ++i) {
        const auto& e = events_[i];
        if (!(e.t >= 0.0) || e.t > horizon_)
            throw DomainError("event " + std::to_string(i) + " time outside [0, T]");
        if (e.src < 0 || e.dst < 0 || e.src >= node_count_ || e.dst >= node_count_)
            throw DomainError("event " + std::to_string(i) + " node id out of range");
        if (e.src == e.dst) throw DomainError("event " + std::to_string(i) + " is a self-edge");
    }
}

EventSequence EventSequence::prefix(std::size_t n, double horizon) const {
    n = std::min(n, events_.size());
    return EventSequence({events_.begin(), events_.begin() + static_cast<std::ptrdiff_t>(n)},
                         horizon, node_count_);
}

ExpKernel::ExpKernel(double a, double d) : alpha(a), delta(d) {
    if (!(alpha >= 0.0)) throw DomainError("kernel magnitude must be nonnegative");
    if (!(delta > 0.0)) throw DomainError("kernel time scale must be positive");
}

double kernel_value(const ExpKernel& kernel, double dt) {
    if (!(dt >= 0.0)) throw DomainError("kernel evaluated at negative lag");
    return kernel.alpha * std::exp(-dt / kernel.delta);
}

double kernel_compensator(const ExpKernel& kernel, double t_j, double from, double to) {
    if (from > to) throw DomainError("compensator interval has from > to");
    const double lower = std::max(from, t_j);
    if (!(to > lower)) return 0.0;
    const double head = std::exp(-(lower - t_j) / kernel.delta);
    return -kernel.alpha * kernel.delta * head * std::expm1(-(to - lower) / kernel.delta);
}

DirectedPairHistory::DirectedPairHistory(const EventSequence& data, int num_communities,
                                         std::span<const int> patterns)
    : K_(num_communities), tagged_(!patterns.empty()) {
    if (K_ < 1) throw DomainError("history needs at least one community");
    if (tagged_ && patterns.size() != data.size())
        throw DomainError("pattern tags must cover every event");
    const int P = K_ * K_;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& e = data[i];
        const NodePair pair{e.src, e.dst};
        times_[pair].push_back(e.t);
        if (tagged_) {
            const int p = patterns[i];
            if (p < 0 || p >= P) throw DomainError("pattern tag out of range");
            auto& lists = by_pattern_[pair];
            if (lists.empty()) lists.resize(static_cast<std::size_t>(P));
            lists[static_cast<std::size_t>(p)].push_back(e.t);
        }
    }
}

std::span<const double> DirectedPairHistory::times(NodePair pair) const {
    auto it = times_.find(pair);
    if (it == times_.end()) return {};
    return it->second;
}

std::span<const double> DirectedPairHistory::tagged_times(NodePair pair, int pattern) const {
    if (!tagged_) {
        if (K_ == 1) return times(pair);
        throw DomainError("history carries no pattern tags");
    }
    auto it = by_pattern_.find(pair);
    if (it == by_pattern_.end()) return {};
    return it->second[static_cast<std::size_t>(pattern)];
}

}  // namespace hepm
