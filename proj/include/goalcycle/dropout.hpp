// Expert configuration and the expert-visibility state machines.
#pragma once

#include "goalcycle/core.hpp"

#include <string>

namespace goalcycle::expert {

struct ExpertConfig {
    double speed = 1.0;  // multiplier on base translation
    double noise = 0.0;  // probability of a uniform random action
};

/// Bot-speed units (7..14) mapped linearly onto [0.5, 1.75] x base speed.
inline double speed_multiplier_from_units(double units) { return 0.5 + (units - 7.0) * (1.25 / 7.0); }

struct DropoutScheme {
    enum class Kind { No, Full, Half, Probabilistic, Cutoff };
    Kind kind = Kind::No;
    double p = 0.0;  // toggle probability, Probabilistic only
    int cutoff = 0;  // visible while t <= cutoff, Cutoff only (recall and sweep protocols)

    static DropoutScheme no() { return {Kind::No, 0.0, 0}; }
    static DropoutScheme full() { return {Kind::Full, 0.0, 0}; }
    static DropoutScheme half() { return {Kind::Half, 0.0, 0}; }
    static DropoutScheme probabilistic(double p) { return {Kind::Probabilistic, p, 0}; }
    static DropoutScheme until(int t) { return {Kind::Cutoff, 0.0, t}; }

    friend bool operator==(const DropoutScheme&, const DropoutScheme&) = default;
};

void validate(const DropoutScheme& s);

/// e_0.
bool initial_visibility(const DropoutScheme& s);

/// e_t from e_{t-1}. Only Probabilistic draws from `rng`.
bool dropout_advance(const DropoutScheme& s, bool e_prev, int t, int episode_length, Rng& rng);

std::string to_string(const DropoutScheme& s);
/// "no", "full", "half", "prob:<p>", "until:<t>".
DropoutScheme parse_dropout(const std::string& text);

}  // namespace goalcycle::expert
