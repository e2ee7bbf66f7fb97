#include "hepm/random.hpp"

#include <algorithm>
#include <cmath>

namespace hepm {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng make_stream(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(root);
    for (auto id : path) h = mix64(h ^ mix64(id + 0x632be59bd9b4e019ULL));
    return Rng(h);
}

double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double sample_gamma(double shape, double scale, Rng& rng) {
    if (!(shape > 0.0) || !(scale > 0.0)) return 0.0;
    return std::gamma_distribution<double>(shape, scale)(rng);
}

double sample_normal(double mean, double sd, Rng& rng) {
    return std::normal_distribution<double>(mean, sd)(rng);
}

std::uint64_t sample_poisson(double rate, Rng& rng) {
    if (!(rate > 0.0)) return 0;
    return std::poisson_distribution<std::uint64_t>(rate)(rng);
}

std::uint64_t sample_zero_truncated_poisson(double rate, Rng& rng) {
    if (rate >= 1.0) {
        // acceptance probability 1 - e^{-rate} >= 0.63
        for (;;) {
            auto n = sample_poisson(rate, rng);
            if (n >= 1) return n;
        }
    }
    // inversion on the truncated pmf; terms shrink geometrically for rate < 1
    const double norm = -std::expm1(-rate);
    double u = uniform01(rng) * norm;
    double term = rate * std::exp(-rate);
    std::uint64_t k = 1;
    while (u > term && k < 1000) {
        u -= term;
        ++k;
        term *= rate / static_cast<double>(k);
    }
    return k;
}

std::uint64_t sample_crt(std::uint64_t n, double r, Rng& rng) {
    if (n == 0 || !(r > 0.0)) return 0;
    constexpr std::uint64_t kExact = 1000000;
    std::uint64_t tables = 0;
    const std::uint64_t head = std::min(n, kExact);
    for (std::uint64_t i = 0; i < head; ++i) {
        if (uniform01(rng) * (r + static_cast<double>(i)) < r) ++tables;
    }
    if (n > kExact) {
        // remaining Bernoulli(r / (r + i)) terms as one Poisson; total variation error <= r^2 / kExact
        auto psi = [](double x) { return std::log(x) - 0.5 / x - 1.0 / (12.0 * x * x); };
        tables += sample_poisson(r * (psi(r + static_cast<double>(n)) - psi(r + static_cast<double>(kExact))), rng);
    }
    return tables;
}

double slice_sample(const std::function<double(double)>& logf, double x, double width, Rng& rng) {
    const double level = logf(x) + std::log(uniform01(rng));
    double lo = x - width * uniform01(rng);
    double hi = lo + width;
    for (int i = 0; i < 64 && logf(lo) > level; ++i) lo -= width;
    for (int i = 0; i < 64 && logf(hi) > level; ++i) hi += width;
    for (;;) {
        const double y = lo + (hi - lo) * uniform01(rng);
        if (logf(y) > level) return y;
        (y < x ? lo : hi) = y;
        if (!(hi - lo > 1e-14 * (1.0 + std::abs(x)))) return x;
    }
}

std::size_t sample_categorical(std::span<const double> weights, double total, Rng& rng) {
    double u = uniform01(rng) * total;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        last_positive = i;
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return last_positive;
}

}  // namespace hepm
