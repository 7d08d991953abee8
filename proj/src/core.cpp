#include "goalcycle/core.hpp"

#include <cmath>

namespace goalcycle {

double standard_normal(Rng& rng) {
    // Box-Muller on the project's own uniforms so draws are identical across toolchains.
    double u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

int poisson(Rng& rng, double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 500.0) {
        const double x = std::round(mean + std::sqrt(mean) * standard_normal(rng));
        return x < 0.0 ? 0 : static_cast<int>(x);
    }
    // Sequential inversion in log space.
    const double u = uniform01(rng);
    int k = 0;
    double log_p = -mean;
    double cdf = std::exp(log_p);
    while (u > cdf && k < 10000) {
        ++k;
        log_p += std::log(mean) - std::log(static_cast<double>(k));
        cdf += std::exp(log_p);
    }
    return k;
}

}  // namespace goalcycle
