#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hepm {

using NodeId = std::int32_t;

/// Ordered (directed) node pair.
struct NodePair {
    NodeId src{0};
    NodeId dst{0};

    auto operator<=>(const NodePair&) const = default;
    bool operator==(const NodePair&) const = default;

    NodePair reversed() const { return {dst, src}; }
};

// Error hierarchy. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Precondition on an argument violated (negative time, u == v, ...).
struct DomainError : Error {
    using Error::Error;
};

/// A numerical quantity became invalid (zero intensity at an event, NaN objective, ...).
struct NumericalError : Error {
    using Error::Error;
};

/// Malformed input file or checkpoint.
struct DataError : Error {
    using Error::Error;
};

/// A pipeline stage was invoked without the artifact of an upstream stage.
struct StageError : Error {
    using Error::Error;
};

/// Latent patterns (k, k') are flattened row-major: k * K + k'.
constexpr int pattern_index(int k, int kp, int K) { return k * K + kp; }

/// The pattern an event tagged `p` excites in the opposite direction: (k, k') -> (k', k).
constexpr int reverse_pattern(int p, int K) { return (p % K) * K + p / K; }

}  // namespace hepm
