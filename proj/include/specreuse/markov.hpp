#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "specreuse/rng.hpp"

namespace specreuse {

/// Two-state on/off Markov chain for the licensed transmitter. State 0 is
/// idle, state 1 is active. Rows must sum to one and every entry must be
/// strictly positive, so the chain is irreducible and aperiodic.
class TransitionMatrix {
public:
    TransitionMatrix(double a00, double a01, double a10, double a11)
        : a00_(a00), a01_(a01), a10_(a10), a11_(a11) {
        if (!(a00 > 0.0 && a01 > 0.0 && a10 > 0.0 && a11 > 0.0))
            throw std::invalid_argument("transition probabilities must be strictly positive");
        if (std::abs((a00 + a01) - 1.0) > 1e-12 || std::abs((a10 + a11) - 1.0) > 1e-12)
            throw std::invalid_argument("transition matrix rows must sum to 1");
    }

    /// Build from the two switching rates; staying probabilities are the
    /// exact complements.
    static TransitionMatrix from_rates(double a01, double a10) {
        return TransitionMatrix(1.0 - a01, a01, a10, 1.0 - a10);
    }

    double a00() const { return a00_; }
    double a01() const { return a01_; }
    double a10() const { return a10_; }
    double a11() const { return a11_; }

    /// Probability a(i,j) of moving from state i to state j.
    double operator()(int i, int j) const {
        return i == 0 ? (j == 0 ? a00_ : a01_) : (j == 0 ? a10_ : a11_);
    }

    /// Dwell times dominate switching. Gates the unconditional-quantile
    /// calibration, which is only safe in this regime.
    bool is_slow_switching() const { return a01_ + a10_ < 1.0; }

private:
    double a00_, a01_, a10_, a11_;
};

class StationaryDistribution {
public:
    StationaryDistribution(double pi0, double pi1) : pi0_(pi0), pi1_(pi1) {
        if (!(pi0 >= 0.0 && pi1 >= 0.0 && std::abs((pi0 + pi1) - 1.0) <= 1e-12))
            throw std::invalid_argument("stationary probabilities must be nonnegative and sum to 1");
    }

    double pi0() const { return pi0_; }
    double pi1() const { return pi1_; }
    double operator[](int j) const { return j == 0 ? pi0_ : pi1_; }

private:
    double pi0_, pi1_;
};

/// pi = (a10, a01) / (a01 + a10). Unique because all entries are positive.
inline StationaryDistribution stationary_distribution(const TransitionMatrix& a) {
    const double denom = a.a01() + a.a10();
    return StationaryDistribution(a.a10() / denom, a.a01() / denom);
}

struct StateTrace {
    std::vector<std::uint8_t> states;
    std::uint64_t seed = 0;
};

/// Sample n slots with the initial state drawn from the stationary
/// distribution. Reproducible: identical (a, n, seed) gives identical traces.
inline StateTrace sample_trace(const TransitionMatrix& a, std::int64_t n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("trace length must be at least 1");
    Stream rng = make_stream(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const StationaryDistribution pi = stationary_distribution(a);

    StateTrace trace;
    trace.seed = seed;
    trace.states.resize(static_cast<std::size_t>(n));
    std::uint8_t q = unit(rng) < pi.pi1() ? 1 : 0;
    trace.states[0] = q;
    for (std::int64_t k = 1; k < n; ++k) {
        const double p_active = q ? a.a11() : a.a01();
        q = unit(rng) < p_active ? 1 : 0;
        trace.states[static_cast<std::size_t>(k)] = q;
    }
    return trace;
}

/// Same walk but with a pinned initial state. Test support; production
/// callers always start from the stationary distribution.
inline StateTrace sample_trace_from(const TransitionMatrix& a, std::int64_t n,
                                    std::uint8_t initial_state, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("trace length must be at least 1");
    Stream rng = make_stream(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    StateTrace trace;
    trace.seed = seed;
    trace.states.resize(static_cast<std::size_t>(n));
    std::uint8_t q = initial_state ? 1 : 0;
    trace.states[0] = q;
    for (std::int64_t k = 1; k < n; ++k) {
        const double p_active = q ? a.a11() : a.a01();
        q = unit(rng) < p_active ? 1 : 0;
        trace.states[static_cast<std::size_t>(k)] = q;
    }
    return trace;
}

struct TransitionCounts {
    std::array<std::array<std::int64_t, 2>, 2> n{{{0, 0}, {0, 0}}};

    std::int64_t operator()(int i, int j) const { return n[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }

    double row_frequency(int i, int j) const {
        const double row = static_cast<double>(n[static_cast<std::size_t>(i)][0] + n[static_cast<std::size_t>(i)][1]);
        return static_cast<double>(n[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) / row;
    }
};

inline TransitionCounts empirical_transition_counts(std::span<const std::uint8_t> states) {
    if (states.size() < 2) throw std::invalid_argument("trace too short");
    TransitionCounts counts;
    for (std::size_t k = 0; k + 1 < states.size(); ++k)
        ++counts.n[states[k] ? 1u : 0u][states[k + 1] ? 1u : 0u];
    return counts;
}

inline TransitionCounts empirical_transition_counts(const StateTrace& trace) {
    return empirical_transition_counts(std::span<const std::uint8_t>(trace.states));
}

} // namespace specreuse
