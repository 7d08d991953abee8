// Shared vocabulary types: geometry aliases, seeded generators, error types.
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace goalcycle {

using Vec2 = Eigen::Vector2d;
using Rng = std::mt19937_64;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Violated precondition on a public operation (e.g. stepping a finished episode).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Procedural generation could not satisfy its constraints within budget.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PlanningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ClassificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A metric whose denominator is zero or nonpositive.
class UndefinedMetric : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Probing dataset cannot support a classifier (e.g. a single label class).
class ProbingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ReplayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// splitmix64 finaliser; used to derive independent child streams from one seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Training and evaluation layout seeds keep the top bit clear; probe suites set it.
inline constexpr std::uint64_t kTrainSeedMask = ~(std::uint64_t{1} << 63);

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix_seed(seed ^ mix_seed(tag + 0x51ED270B27AULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t tag) {
    return Rng(derive_seed(seed, tag));
}

inline double uniform01(Rng& rng) {
    // 53 random bits; independent of the standard library's distribution code.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline int uniform_int(Rng& rng, int n) {
    return static_cast<int>(uniform01(rng) * n);
}

inline bool bernoulli(Rng& rng, double p) {
    return uniform01(rng) < p;
}

double standard_normal(Rng& rng);

int poisson(Rng& rng, double mean);

inline double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    if (a >= kTwoPi) a = 0.0;
    return a;
}

/// Signed smallest difference b - a in (-pi, pi].
inline double angle_diff(double a, double b) {
    double d = std::fmod(b - a, kTwoPi);
    if (d > kPi) d -= kTwoPi;
    if (d <= -kPi) d += kTwoPi;
    return d;
}

}  // namespace goalcycle
