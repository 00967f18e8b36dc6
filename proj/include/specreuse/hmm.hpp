#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "specreuse/emission.hpp"
#include "specreuse/markov.hpp"
#include "specreuse/numeric.hpp"

namespace specreuse {

/// Filtered state after k slots: alpha[j] is Pr{q_k = j | y_1..y_k} and
/// log_evidence accumulates log Pr{y_1..y_k}. The raw forward variables
/// underflow long before k reaches simulation lengths, so the recursion
/// renormalizes every step; the predictive log-odds are invariant to that
/// scaling.
struct ForwardState {
    std::array<double, 2> alpha{0.0, 0.0};
    double log_evidence = 0.0;
    std::size_t k = 0;
};

inline ForwardState forward_init(const StationaryDistribution& pi, const EmissionModel& m,
                                 double y1) {
    const double w0 = std::log(pi.pi0()) + m.log_pdf(0, y1);
    const double w1 = std::log(pi.pi1()) + m.log_pdf(1, y1);
    const double lse = log_sum_exp(w0, w1);
    ForwardState s;
    s.alpha = {std::exp(w0 - lse), std::exp(w1 - lse)};
    s.log_evidence = lse;
    s.k = 1;
    return s;
}

inline ForwardState forward_step(const ForwardState& s, const TransitionMatrix& a,
                                 const EmissionModel& m, double y_next) {
    // One-step prediction stays strictly positive because all transition
    // probabilities do, so only the emission weights need log-domain care.
    const double prior0 = s.alpha[0] * a.a00() + s.alpha[1] * a.a10();
    const double prior1 = s.alpha[0] * a.a01() + s.alpha[1] * a.a11();
    const double lb0 = m.log_pdf(0, y_next);
    const double lb1 = m.log_pdf(1, y_next);
    const double shift = lb0 > lb1 ? lb0 : lb1;
    const double t0 = prior0 * std::exp(lb0 - shift);
    const double t1 = prior1 * std::exp(lb1 - shift);
    const double norm = t0 + t1;

    ForwardState next;
    next.alpha = {t0 / norm, t1 / norm};
    next.log_evidence = s.log_evidence + shift + std::log(norm);
    next.k = s.k + 1;
    return next;
}

/// Predictive log-odds of the next state given the filtered state. The ratio
/// cancels any common scaling of the forward variables.
inline double llr_from_alphas(const TransitionMatrix& a, double alpha0, double alpha1) {
    return std::log((a.a01() * alpha0 + a.a11() * alpha1) /
                    (a.a00() * alpha0 + a.a10() * alpha1));
}

inline double llr(const ForwardState& s, const TransitionMatrix& a) {
    return llr_from_alphas(a, s.alpha[0], s.alpha[1]);
}

struct LlrTrace {
    std::vector<double> z;
};

/// Causal pass: z[k] depends on y_1..y_{k+1} only (0-based k). The initial
/// state prior is the stationary distribution of `a`.
inline LlrTrace llr_trace(const TransitionMatrix& a, const EmissionModel& m,
                          std::span<const double> y) {
    if (y.empty()) throw std::invalid_argument("observation sequence must not be empty");
    LlrTrace out;
    out.z.resize(y.size());
    ForwardState s = forward_init(stationary_distribution(a), m, y[0]);
    out.z[0] = llr(s, a);
    for (std::size_t k = 1; k < y.size(); ++k) {
        s = forward_step(s, a, m, y[k]);
        out.z[k] = llr(s, a);
    }
    return out;
}

struct SmoothedStates {
    std::vector<double> gamma1;        // Pr{q_k = 1 | y_1..y_N}
    std::vector<std::uint8_t> q_hat;   // gamma1 >= 0.5, ties mapped to state 1
};

namespace detail {

struct ForwardBackwardTables {
    std::vector<std::array<double, 2>> logb;
    std::vector<std::array<double, 2>> alpha; // normalized filter
    std::vector<std::array<double, 2>> beta;  // normalized to sum 1 per slot
    double log_evidence = 0.0;
};

inline ForwardBackwardTables forward_backward_tables(const TransitionMatrix& a,
                                                     const EmissionModel& m,
                                                     const StationaryDistribution& pi,
                                                     std::span<const double> y) {
    const std::size_t n = y.size();
    ForwardBackwardTables t;
    t.logb.resize(n);
    t.alpha.resize(n);
    t.beta.resize(n);
    for (std::size_t k = 0; k < n; ++k)
        t.logb[k] = {m.log_pdf(0, y[k]), m.log_pdf(1, y[k])};

    {
        const double w0 = std::log(pi.pi0()) + t.logb[0][0];
        const double w1 = std::log(pi.pi1()) + t.logb[0][1];
        const double lse = log_sum_exp(w0, w1);
        t.alpha[0] = {std::exp(w0 - lse), std::exp(w1 - lse)};
        t.log_evidence = lse;
    }
    for (std::size_t k = 1; k < n; ++k) {
        const double prior0 = t.alpha[k - 1][0] * a.a00() + t.alpha[k - 1][1] * a.a10();
        const double prior1 = t.alpha[k - 1][0] * a.a01() + t.alpha[k - 1][1] * a.a11();
        const double shift = t.logb[k][0] > t.logb[k][1] ? t.logb[k][0] : t.logb[k][1];
        const double u0 = prior0 * std::exp(t.logb[k][0] - shift);
        const double u1 = prior1 * std::exp(t.logb[k][1] - shift);
        const double norm = u0 + u1;
        t.alpha[k] = {u0 / norm, u1 / norm};
        t.log_evidence += shift + std::log(norm);
    }

    t.beta[n - 1] = {0.5, 0.5};
    for (std::size_t k = n - 1; k-- > 0;) {
        const double shift = t.logb[k + 1][0] > t.logb[k + 1][1] ? t.logb[k + 1][0] : t.logb[k + 1][1];
        const double e0 = std::exp(t.logb[k + 1][0] - shift) * t.beta[k + 1][0];
        const double e1 = std::exp(t.logb[k + 1][1] - shift) * t.beta[k + 1][1];
        const double b0 = a.a00() * e0 + a.a01() * e1;
        const double b1 = a.a10() * e0 + a.a11() * e1;
        const double norm = b0 + b1;
        t.beta[k] = {b0 / norm, b1 / norm};
    }
    return t;
}

} // namespace detail

/// Smoothed posteriors via the scaled forward-backward recursion. The hard
/// estimate is the marginal maximizer with the 0.5 tie broken toward the
/// active state.
inline SmoothedStates forward_backward(const TransitionMatrix& a, const EmissionModel& m,
                                       std::span<const double> y) {
    if (y.empty()) throw std::invalid_argument("observation sequence must not be empty");
    const auto t = detail::forward_backward_tables(a, m, stationary_distribution(a), y);
    SmoothedStates out;
    out.gamma1.resize(y.size());
    out.q_hat.resize(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double g0 = t.alpha[k][0] * t.beta[k][0];
        const double g1 = t.alpha[k][1] * t.beta[k][1];
        out.gamma1[k] = g1 / (g0 + g1);
        out.q_hat[k] = out.gamma1[k] >= 0.5 ? 1 : 0;
    }
    return out;
}

struct BaumWelchResult {
    TransitionMatrix a;
    EmissionModel emission;
    std::vector<double> log_likelihood; // one entry per iteration, nondecreasing
};

/// Baum-Welch estimation of the transition matrix and both energy variances.
/// K is a receiver design parameter and stays fixed. The initial-state
/// distribution is treated as a free parameter internally (standard EM
/// updates, which keep the likelihood nondecreasing); states are relabeled at
/// the end so that sigma1_sq > sigma0_sq.
inline BaumWelchResult baum_welch(std::span<const double> y, const TransitionMatrix& a_init,
                                  const EmissionModel& m_init, int max_iters = 100,
                                  double tol = 1e-8) {
    const std::size_t n = y.size();
    if (n < 2) throw std::invalid_argument("estimation needs at least 2 observations");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");

    const int k_samples = m_init.k();
    const double k = static_cast<double>(k_samples);
    double a00 = a_init.a00(), a01 = a_init.a01(), a10 = a_init.a10(), a11 = a_init.a11();
    double s0 = m_init.sigma0_sq(), s1 = m_init.sigma1_sq();
    const StationaryDistribution pi_init = stationary_distribution(a_init);
    double pi0 = pi_init.pi0(), pi1 = pi_init.pi1();

    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(max_iters));

    std::vector<std::array<double, 2>> logb(n), alpha(n), beta(n);

    for (int iter = 0; iter < max_iters; ++iter) {
        for (std::size_t t = 0; t < n; ++t) {
            const double ly = std::log(y[t]);
            logb[t][0] = (k - 1.0) * ly - y[t] / s0 - k * std::log(s0) - std::lgamma(k);
            logb[t][1] = (k - 1.0) * ly - y[t] / s1 - k * std::log(s1) - std::lgamma(k);
        }

        double log_evidence;
        {
            const double w0 = std::log(pi0) + logb[0][0];
            const double w1 = std::log(pi1) + logb[0][1];
            const double lse = log_sum_exp(w0, w1);
            alpha[0] = {std::exp(w0 - lse), std::exp(w1 - lse)};
            log_evidence = lse;
        }
        for (std::size_t t = 1; t < n; ++t) {
            const double prior0 = alpha[t - 1][0] * a00 + alpha[t - 1][1] * a10;
            const double prior1 = alpha[t - 1][0] * a01 + alpha[t - 1][1] * a11;
            const double shift = logb[t][0] > logb[t][1] ? logb[t][0] : logb[t][1];
            const double u0 = prior0 * std::exp(logb[t][0] - shift);
            const double u1 = prior1 * std::exp(logb[t][1] - shift);
            const double norm = u0 + u1;
            alpha[t] = {u0 / norm, u1 / norm};
            log_evidence += shift + std::log(norm);
        }
        beta[n - 1] = {0.5, 0.5};
        for (std::size_t t = n - 1; t-- > 0;) {
            const double shift = logb[t + 1][0] > logb[t + 1][1] ? logb[t + 1][0] : logb[t + 1][1];
            const double e0 = std::exp(logb[t + 1][0] - shift) * beta[t + 1][0];
            const double e1 = std::exp(logb[t + 1][1] - shift) * beta[t + 1][1];
            const double b0 = a00 * e0 + a01 * e1;
            const double b1 = a10 * e0 + a11 * e1;
            const double norm = b0 + b1;
            beta[t] = {b0 / norm, b1 / norm};
        }

        const bool converged =
            !history.empty() &&
            std::abs(log_evidence - history.back()) < tol * std::abs(log_evidence);
        history.push_back(log_evidence);
        if (converged) break;

        double gamma_sum[2] = {0.0, 0.0};       // over all slots
        double gamma_sum_trans[2] = {0.0, 0.0}; // over slots 1..N-1
        double gamma_y[2] = {0.0, 0.0};
        double xi_sum[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
        double gamma_first[2] = {0.0, 0.0};

        for (std::size_t t = 0; t < n; ++t) {
            const double g0 = alpha[t][0] * beta[t][0];
            const double g1 = alpha[t][1] * beta[t][1];
            const double norm = g0 + g1;
            const double gamma0 = g0 / norm, gamma1 = g1 / norm;
            gamma_sum[0] += gamma0;
            gamma_sum[1] += gamma1;
            gamma_y[0] += gamma0 * y[t];
            gamma_y[1] += gamma1 * y[t];
            if (t == 0) {
                gamma_first[0] = gamma0;
                gamma_first[1] = gamma1;
            }
            if (t + 1 < n) {
                gamma_sum_trans[0] += gamma0;
                gamma_sum_trans[1] += gamma1;
                const double shift =
                    logb[t + 1][0] > logb[t + 1][1] ? logb[t + 1][0] : logb[t + 1][1];
                const double e0 = std::exp(logb[t + 1][0] - shift) * beta[t + 1][0];
                const double e1 = std::exp(logb[t + 1][1] - shift) * beta[t + 1][1];
                const double w00 = alpha[t][0] * a00 * e0;
                const double w01 = alpha[t][0] * a01 * e1;
                const double w10 = alpha[t][1] * a10 * e0;
                const double w11 = alpha[t][1] * a11 * e1;
                const double wn = w00 + w01 + w10 + w11;
                xi_sum[0][0] += w00 / wn;
                xi_sum[0][1] += w01 / wn;
                xi_sum[1][0] += w10 / wn;
                xi_sum[1][1] += w11 / wn;
            }
        }

        for (int i = 0; i < 2; ++i) {
            if (!(gamma_sum[i] > 0.0) || !(gamma_sum_trans[i] > 0.0) || !std::isfinite(gamma_sum[i]))
                throw std::runtime_error("degenerate component");
        }

        a00 = xi_sum[0][0] / gamma_sum_trans[0];
        a01 = xi_sum[0][1] / gamma_sum_trans[0];
        a10 = xi_sum[1][0] / gamma_sum_trans[1];
        a11 = xi_sum[1][1] / gamma_sum_trans[1];
        const double r0 = a00 + a01, r1 = a10 + a11;
        a00 /= r0;
        a01 /= r0;
        a10 /= r1;
        a11 /= r1;
        s0 = gamma_y[0] / (k * gamma_sum[0]);
        s1 = gamma_y[1] / (k * gamma_sum[1]);
        pi0 = gamma_first[0];
        pi1 = gamma_first[1];

        if (!(a00 > 0.0 && a01 > 0.0 && a10 > 0.0 && a11 > 0.0) || !(s0 > 0.0) || !(s1 > 0.0) ||
            !(pi0 > 0.0) || !(pi1 > 0.0))
            throw std::runtime_error("degenerate component");
    }

    // The two-state model is identifiable only up to relabeling; order by
    // variance so that state 1 is signal-plus-noise.
    if (s0 >= s1) {
        if (s0 == s1) throw std::runtime_error("degenerate component");
        std::swap(s0, s1);
        std::swap(a00, a11);
        std::swap(a01, a10);
    }

    return BaumWelchResult{TransitionMatrix(a00, a01, a10, a11),
                           EmissionModel(k_samples, s0, s1), std::move(history)};
}

struct BruteForcePosteriors {
    std::vector<double> z;      // predictive log-odds per prefix
    std::vector<double> gamma1; // smoothed posterior per slot
    double log_evidence = 0.0;
};

/// Exact posteriors by explicit summation over all 2^N state paths with
/// log-sum-exp accumulation. Test oracle; deliberately shares no code with
/// the recursive implementations above.
inline BruteForcePosteriors brute_force_posteriors(const TransitionMatrix& a,
                                                   const EmissionModel& m,
                                                   std::span<const double> y) {
    const std::size_t n = y.size();
    if (n == 0) throw std::invalid_argument("observation sequence must not be empty");
    if (n > 16) throw std::invalid_argument("path enumeration limited to 16 slots");

    const StationaryDistribution pi = stationary_distribution(a);
    const double log_pi[2] = {std::log(pi.pi0()), std::log(pi.pi1())};
    const double log_a[2][2] = {{std::log(a.a00()), std::log(a.a01())},
                                {std::log(a.a10()), std::log(a.a11())}};
    std::vector<std::array<double, 2>> logb(n);
    for (std::size_t t = 0; t < n; ++t)
        logb[t] = {m.log_pdf(0, y[t]), m.log_pdf(1, y[t])};

    const auto path_log_weight = [&](std::uint32_t mask, std::size_t len) {
        int prev = mask & 1u;
        double w = log_pi[prev] + logb[0][static_cast<std::size_t>(prev)];
        for (std::size_t t = 1; t < len; ++t) {
            const int cur = (mask >> t) & 1u;
            w += log_a[prev][cur] + logb[t][static_cast<std::size_t>(cur)];
            prev = cur;
        }
        return w;
    };

    BruteForcePosteriors out;
    out.z.resize(n);
    for (std::size_t len = 1; len <= n; ++len) {
        double next[2] = {neg_inf, neg_inf};
        const std::uint32_t count = 1u << len;
        for (std::uint32_t mask = 0; mask < count; ++mask) {
            const double w = path_log_weight(mask, len);
            const int last = (mask >> (len - 1)) & 1u;
            next[0] = log_sum_exp(next[0], w + log_a[last][0]);
            next[1] = log_sum_exp(next[1], w + log_a[last][1]);
        }
        out.z[len - 1] = next[1] - next[0];
    }

    std::vector<std::array<double, 2>> acc(n, {neg_inf, neg_inf});
    double evidence = neg_inf;
    const std::uint32_t count = 1u << n;
    for (std::uint32_t mask = 0; mask < count; ++mask) {
        const double w = path_log_weight(mask, n);
        evidence = log_sum_exp(evidence, w);
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t bit = (mask >> t) & 1u;
            acc[t][bit] = log_sum_exp(acc[t][bit], w);
        }
    }
    out.gamma1.resize(n);
    for (std::size_t t = 0; t < n; ++t)
        out.gamma1[t] = std::exp(acc[t][1] - log_sum_exp(acc[t][0], acc[t][1]));
    out.log_evidence = evidence;
    return out;
}

} // namespace specreuse
