#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

#include "specreuse/markov.hpp"

namespace specreuse {

/// Utilization (transmit | next idle) and interference (transmit | next
/// active) ratios. A ratio with no conditioning slots is reported absent
/// rather than zero so degenerate traces cannot pass interference checks.
struct UrIr {
    std::optional<double> ur;
    std::optional<double> ir;
    std::int64_t n_idle = 0;
    std::int64_t n_active = 0;

    std::optional<double> ur_stderr() const { return binomial_stderr(ur, n_idle); }
    std::optional<double> ir_stderr() const { return binomial_stderr(ir, n_active); }

    static std::optional<double> binomial_stderr(std::optional<double> p, std::int64_t n) {
        if (!p || n < 1) return std::nullopt;
        return std::sqrt(*p * (1.0 - *p) / static_cast<double>(n));
    }
};

struct ConditionalActionProbs {
    double p0; // Pr{u_{k+1}=0 | q_k=0}
    double p1; // Pr{u_{k+1}=1 | q_k=1}

    ConditionalActionProbs(double p0_, double p1_) : p0(p0_), p1(p1_) {
        if (!(p0 >= 0.0 && p0 <= 1.0 && p1 >= 0.0 && p1 <= 1.0))
            throw std::invalid_argument("conditional action probabilities must be in [0,1]");
    }
};

/// Score aligned (decision, state) pairs: u[k] is the decision for the slot
/// whose state is q[k].
inline UrIr empirical_ur_ir(std::span<const std::uint8_t> u, std::span<const std::uint8_t> q) {
    if (u.size() != q.size()) throw std::invalid_argument("decision/state sequences must align");
    if (u.empty()) throw std::invalid_argument("nothing to score");

    std::int64_t idle = 0, active = 0, tx_idle = 0, tx_active = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (q[k]) {
            ++active;
            if (u[k]) ++tx_active;
        } else {
            ++idle;
            if (u[k]) ++tx_idle;
        }
    }

    UrIr out;
    out.n_idle = idle;
    out.n_active = active;
    if (idle > 0) out.ur = static_cast<double>(tx_idle) / static_cast<double>(idle);
    if (active > 0) out.ir = static_cast<double>(tx_active) / static_cast<double>(active);
    return out;
}

/// Closed forms for a strategy whose action depends on the current state
/// only through (P0, P1): ur = a01*P1 + a00*(1-P0), ir = a11*P1 + a10*(1-P0).
inline UrIr closed_form_ur_ir(const TransitionMatrix& a, const ConditionalActionProbs& probs) {
    UrIr out;
    out.ur = a.a01() * probs.p1 + a.a00() * (1.0 - probs.p0);
    out.ir = a.a11() * probs.p1 + a.a10() * (1.0 - probs.p0);
    return out;
}

struct Interval {
    double lo;
    double hi;
};

/// Feasible P1 given a target interference ratio:
/// [max{0, (rho - a10)/a11}, min{1, rho/a11}].
inline Interval feasible_p1_range(const TransitionMatrix& a, double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must be in [0,1]");
    return Interval{std::max(0.0, (rho - a.a10()) / a.a11()), std::min(1.0, rho / a.a11())};
}

/// Largest utilization ratio any strategy can reach while keeping the
/// interference ratio at or below rho_max.
inline double ur_upper_bound(const TransitionMatrix& a, double rho_max) {
    if (!(rho_max > 0.0 && rho_max < 1.0))
        throw std::invalid_argument("rho_max must be in (0,1)");
    const double gap = 1.0 - a.a01() - a.a10();
    if (a.a01() + a.a10() <= 1.0)
        return rho_max + gap * std::min(rho_max / a.a10(), (1.0 - rho_max) / a.a11());
    return rho_max - gap * std::min(rho_max / a.a11(), (1.0 - rho_max) / a.a10());
}

} // namespace specreuse
