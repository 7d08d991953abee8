#include "goalcycle/dropout.hpp"

#include <sstream>
#include <stdexcept>

namespace goalcycle::expert {

void validate(const DropoutScheme& s) {
    if (s.kind == DropoutScheme::Kind::Probabilistic && !(s.p >= 0.0 && s.p <= 1.0)) {
        throw std::invalid_argument("dropout probability must be in [0, 1]");
    }
    if (s.kind == DropoutScheme::Kind::Cutoff && s.cutoff < 0) {
        throw std::invalid_argument("dropout cutoff must be >= 0");
    }
}

bool initial_visibility(const DropoutScheme& s) { return s.kind != DropoutScheme::Kind::Full; }

bool dropout_advance(const DropoutScheme& s, bool e_prev, int t, int episode_length, Rng& rng) {
    switch (s.kind) {
        case DropoutScheme::Kind::No: return true;
        case DropoutScheme::Kind::Full: return false;
        case DropoutScheme::Kind::Half: return t <= episode_length / 2;
        case DropoutScheme::Kind::Cutoff: return t <= s.cutoff;
        case DropoutScheme::Kind::Probabilistic: return bernoulli(rng, s.p) ? !e_prev : e_prev;
    }
    return e_prev;
}

std::string to_string(const DropoutScheme& s) {
    switch (s.kind) {
        case DropoutScheme::Kind::No: return "no";
        case DropoutScheme::Kind::Full: return "full";
        case DropoutScheme::Kind::Half: return "half";
        case DropoutScheme::Kind::Cutoff: return "until:" + std::to_string(s.cutoff);
        case DropoutScheme::Kind::Probabilistic: {
            std::ostringstream os;
            os.precision(17);
            os << "prob:" << s.p;
            return os.str();
        }
    }
    return "no";
}

DropoutScheme parse_dropout(const std::string& text) {
    if (text == "no") return DropoutScheme::no();
    if (text == "full") return DropoutScheme::full();
    if (text == "half") return DropoutScheme::half();
    auto tail = [&](const std::string& prefix) { return text.substr(prefix.size()); };
    try {
        if (text.rfind("prob:", 0) == 0) {
            auto s = DropoutScheme::probabilistic(std::stod(tail("prob:")));
            validate(s);
            return s;
        }
        if (text.rfind("until:", 0) == 0) {
            auto s = DropoutScheme::until(std::stoi(tail("until:")));
            validate(s);
            return s;
        }
    } catch (const std::logic_error&) {
    }
    throw std::invalid_argument("bad dropout scheme '" + text + "'");
}

}  // namespace goalcycle::expert
