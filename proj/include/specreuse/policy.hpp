#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "specreuse/emission.hpp"
#include "specreuse/markov.hpp"
#include "specreuse/numeric.hpp"

namespace specreuse {

enum class CalibrationMethod { KnownStates, EstimatedStates, Unconditional };

inline const char* to_string(CalibrationMethod m) {
    switch (m) {
        case CalibrationMethod::KnownStates: return "known";
        case CalibrationMethod::EstimatedStates: return "estimated";
        case CalibrationMethod::Unconditional: return "unconditional";
    }
    return "unknown";
}

/// Transmit next slot iff the predictive log-odds do not exceed the
/// threshold. theta_llr = -inf is the never-transmit sentinel.
struct LlrPolicy {
    double theta_llr = neg_inf;
    CalibrationMethod method = CalibrationMethod::Unconditional;
    double rho_max = 0.0;

    bool decide(double z) const { return z <= theta_llr; }
};

/// Slot energy detector: transmit next slot iff y_k <= theta_e (the detector
/// declares idle at or below the threshold).
struct BaselinePolicy {
    double theta_e = 0.0;

    bool decide(double y) const { return y <= theta_e; }
};

inline bool decide_llr(const LlrPolicy& p, double z) { return p.decide(z); }
inline bool decide_baseline(const BaselinePolicy& p, double y) {
    if (y < 0.0) throw std::domain_error("energy must be nonnegative");
    return p.decide(y);
}

/// Training log-odds z_1..z_NT; when labels are present, next_states[k] is
/// the state of slot k+1 (true states for the known-state method, smoothed
/// estimates otherwise).
struct CalibrationSet {
    std::vector<double> z;
    std::optional<std::vector<std::uint8_t>> next_states;

    void validate() const {
        if (next_states && next_states->size() != z.size())
            throw std::invalid_argument("labels must align with training samples");
    }
};

/// Largest sample value at which the ECDF does not exceed p: the
/// floor(p*N)-th order statistic (1-based), stepped below any tie block that
/// would push the ECDF past p. Levels below 1/N yield the never-transmit
/// sentinel. Ties matter in practice: at high SNR the log-odds collapse onto
/// their upper bound in floating point, and returning the tied value would
/// let the ECDF at the threshold jump far past p.
inline double ecdf_quantile(std::span<const double> samples, double p) {
    if (samples.empty()) throw std::invalid_argument("empty calibration set");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must be in [0,1]");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const auto m = static_cast<std::size_t>(std::floor(p * static_cast<double>(sorted.size())));
    if (m < 1) return neg_inf;
    const double candidate = sorted[m - 1];
    const auto past = std::upper_bound(sorted.begin(), sorted.end(), candidate);
    if (static_cast<std::size_t>(past - sorted.begin()) <= m) return candidate;
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), candidate);
    if (first == sorted.begin()) return neg_inf;
    return *(first - 1);
}

/// Threshold from the quantile of z conditioned on the next state being
/// active, using true state labels.
inline LlrPolicy calibrate_known(const CalibrationSet& cal, double rho_max) {
    cal.validate();
    if (!(rho_max > 0.0 && rho_max < 1.0))
        throw std::invalid_argument("rho_max must be in (0,1)");
    if (!cal.next_states) throw std::invalid_argument("calibration set lacks state labels");
    std::vector<double> active;
    for (std::size_t k = 0; k < cal.z.size(); ++k)
        if ((*cal.next_states)[k]) active.push_back(cal.z[k]);
    if (active.empty()) throw std::runtime_error("no interference-side samples");
    return LlrPolicy{ecdf_quantile(active, rho_max), CalibrationMethod::KnownStates, rho_max};
}

/// Same conditioning but on estimated next states (smoothed hard decisions
/// from the forward-backward pass). At low SNR with a mostly idle chain the
/// selected subset can be empty; that is an error, not a silent sentinel.
inline LlrPolicy calibrate_estimated(const CalibrationSet& cal,
                                     std::span<const std::uint8_t> q_hat_next, double rho_max) {
    if (!(rho_max > 0.0 && rho_max < 1.0))
        throw std::invalid_argument("rho_max must be in (0,1)");
    if (q_hat_next.size() != cal.z.size())
        throw std::invalid_argument("labels must align with training samples");
    std::vector<double> active;
    for (std::size_t k = 0; k < cal.z.size(); ++k)
        if (q_hat_next[k]) active.push_back(cal.z[k]);
    if (active.empty()) throw std::runtime_error("estimated-active set empty");
    return LlrPolicy{ecdf_quantile(active, rho_max), CalibrationMethod::EstimatedStates, rho_max};
}

/// Threshold from the unconditional quantile of all training log-odds. Needs
/// no state knowledge; keeps the interference ratio at or below rho_max when
/// the chain is slow switching, because the unconditional CDF dominates the
/// CDF conditioned on the next state being active.
inline LlrPolicy calibrate_unconditional(const CalibrationSet& cal, double rho_max,
                                         const TransitionMatrix& a) {
    cal.validate();
    if (!(rho_max > 0.0 && rho_max < 1.0))
        throw std::invalid_argument("rho_max must be in (0,1)");
    if (!a.is_slow_switching())
        throw std::domain_error("safety guarantee requires a01+a10<1");
    return LlrPolicy{ecdf_quantile(cal.z, rho_max), CalibrationMethod::Unconditional, rho_max};
}

/// Energy threshold for the baseline detector so that the closed-form
/// interference ratio a11*pm(theta) + a10*(1-pfa(theta)) equals rho_max.
/// The function is continuous and strictly increasing from 0 to 1, so a
/// geometrically grown bracket plus bisection always converges.
inline BaselinePolicy baseline_threshold(const TransitionMatrix& a, const EmissionModel& m,
                                         double rho_max) {
    if (!(rho_max > 0.0 && rho_max < 1.0))
        throw std::invalid_argument("rho_max must be in (0,1)");
    const auto rho = [&](double theta) {
        return a.a11() * m.pm(theta) + a.a10() * (1.0 - m.pfa(theta));
    };

    double lo = 0.0;
    double hi = static_cast<double>(m.k()) * m.sigma1_sq();
    for (int i = 0; i < 200 && rho(hi) <= rho_max; ++i) hi *= 2.0;

    double theta = hi;
    for (int i = 0; i < 200; ++i) {
        theta = 0.5 * (lo + hi);
        const double r = rho(theta);
        if (std::abs(r - rho_max) <= 1e-10) break;
        if (r < rho_max)
            lo = theta;
        else
            hi = theta;
    }
    return BaselinePolicy{theta};
}

} // namespace specreuse
