#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace specreuse {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow. Handles -inf operands.
inline double log_sum_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double hi = (a > b) ? a : b;
    const double lo = (a > b) ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

namespace detail {

// Lower-tail series: P(a,x) = x^a e^-x / Gamma(a+1) * sum_{n>=0} x^n / prod(a+1..a+n)
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(a * std::log(x) - x - std::lgamma(a));
}

// Upper-tail continued fraction (modified Lentz) for Q(a,x), valid for x >= a+1.
inline double gamma_q_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(a * std::log(x) - x - std::lgamma(a));
}

} // namespace detail

/// Regularized lower incomplete gamma P(a,x) = gamma(a,x)/Gamma(a).
/// Series expansion below x = a+1, continued fraction above.
inline double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) throw std::domain_error("gamma shape must be positive");
    if (x < 0.0) throw std::domain_error("gamma argument must be nonnegative");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

/// Regularized upper incomplete gamma Q(a,x) = 1 - P(a,x), computed in the
/// branch where it is accurate.
inline double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0)) throw std::domain_error("gamma shape must be positive");
    if (x < 0.0) throw std::domain_error("gamma argument must be nonnegative");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

} // namespace specreuse
