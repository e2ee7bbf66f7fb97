#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>

namespace hepm {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Derive an independent stream from a root seed and a path of stream ids.
///
/// All randomness in the library flows from one root seed. Sub-streams are
/// addressed by a path such as {stage, iteration, block}, so results do not
/// depend on the number of worker threads or on scheduling order.
Rng make_stream(std::uint64_t root, std::initializer_list<std::uint64_t> path);

double uniform01(Rng& rng);

/// Gamma(shape, scale). Returns exactly 0 when shape <= 0 (degenerate point mass).
double sample_gamma(double shape, double scale, Rng& rng);

double sample_normal(double mean, double sd, Rng& rng);

std::uint64_t sample_poisson(double rate, Rng& rng);

/// Zero-truncated Poisson: Poisson(rate) conditioned on being >= 1.
std::uint64_t sample_zero_truncated_poisson(double rate, Rng& rng);

/// Chinese restaurant table count: sum of n Bernoulli(r / (r + i - 1)) draws.
/// Beyond 10^6 terms the tail is drawn as a single Poisson with the same mean.
std::uint64_t sample_crt(std::uint64_t n, double r, Rng& rng);

/// One slice-sampling update (stepping out, then shrinkage) of x under the
/// unnormalized log-density logf.
double slice_sample(const std::function<double(double)>& logf, double x, double width, Rng& rng);

/// Index drawn with probability weights[i] / total; total must be their sum.
std::size_t sample_categorical(std::span<const double> weights, double total, Rng& rng);

}  // namespace hepm
