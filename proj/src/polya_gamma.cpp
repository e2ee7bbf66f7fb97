#include "hepm/polya_gamma.hpp"

#include <cmath>
#include <numbers>

#include "hepm/common.hpp"

namespace hepm {

namespace {

void check_shape(double b) {
    if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("Polya-Gamma shape b must be positive");
}

}  // namespace

double pg_expectation(double b, double c) {
    check_shape(b);
    c = std::abs(c);
    if (c < 1e-4) {
        const double c2 = c * c;
        return b * (0.25 - c2 / 48.0 + c2 * c2 / 480.0);
    }
    return b / (2.0 * c) * std::tanh(0.5 * c);
}

double pg_variance(double b, double c) {
    check_shape(b);
    c = std::abs(c);
    if (c < 1e-2) {
        // (sinh c - c) / c^3 = 1/6 + c^2/120 + c^4/5040 + ...
        const double c2 = c * c;
        const double ratio = 1.0 / 6.0 + c2 / 120.0 + c2 * c2 / 5040.0;
        const double ch = std::cosh(0.5 * c);
        return b * ratio / (4.0 * ch * ch);
    }
    if (c > 700.0) return b / (2.0 * c * c * c) * (1.0 - 2.0 * c * std::exp(-c));
    const double ch = std::cosh(0.5 * c);
    return b * (std::sinh(c) - c) / (4.0 * c * c * c * ch * ch);
}

double sample_pg(double b, double c, Rng& rng, int terms) {
    check_shape(b);
    c = std::abs(c);
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    const double c2 = c * c / (4.0 * pi2);
    double draw = 0.0;
    double head_mean = 0.0;
    double head_var = 0.0;
    for (int k = 1; k <= terms; ++k) {
        const double h = k - 0.5;
        const double denom = 2.0 * pi2 * (h * h + c2);
        draw += sample_gamma(b, 1.0, rng) / denom;
        head_mean += b / denom;
        head_var += b / (denom * denom);
    }
    const double tail_mean = pg_expectation(b, c) - head_mean;
    const double tail_var = pg_variance(b, c) - head_var;
    if (tail_mean > 0.0 && tail_var > 0.0)
        draw += sample_gamma(tail_mean * tail_mean / tail_var, tail_var / tail_mean, rng);
    return draw;
}

}  // namespace hepm
