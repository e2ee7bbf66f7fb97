#pragma once

#include "hepm/random.hpp"

namespace hepm {

/// E[omega] for omega ~ PG(b, c): b / (2c) tanh(c / 2), with a series branch
/// near c = 0 whose value at c = 0 is exactly b / 4. Throws DomainError for b <= 0.
double pg_expectation(double b, double c);

/// Var[omega] for omega ~ PG(b, c): b (sinh c - c) / (4 c^3 cosh^2(c / 2)); b / 24 at c = 0.
double pg_variance(double b, double c);

/// Approximate PG(b, c) draw.
///
/// PG(b, c) is the infinite sum sum_k g_k / (2 pi^2 ((k - 1/2)^2 + c^2 / (4 pi^2)))
/// with g_k ~ Gamma(b, 1). The first `terms` summands are drawn exactly; the
/// tail is replaced by one gamma variable whose mean and variance equal those
/// of the remaining summands, so the draw matches the first two moments of
/// PG(b, c) exactly.
double sample_pg(double b, double c, Rng& rng, int terms = 10);

}  // namespace hepm
