#pragma once

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "specreuse/numeric.hpp"
#include "specreuse/rng.hpp"

namespace specreuse {

/// Per-slot collected energy at the sensing receiver. With K complex samples
/// per slot and a circular Gaussian input of variance sigma_i^2, the energy is
/// Gamma(K, sigma_i^2) distributed: a chi-square with 2K degrees of freedom
/// built from Gaussians of variance sigma_i^2 / 2. State 1 adds the signal
/// power, so sigma1_sq = sigma0_sq + sigma_s_sq.
class EmissionModel {
public:
    EmissionModel(int k, double sigma0_sq, double sigma1_sq)
        : k_(k), sigma0_sq_(sigma0_sq), sigma1_sq_(sigma1_sq) {
        if (k < 1) throw std::invalid_argument("samples per slot must be at least 1");
        if (!(sigma0_sq > 0.0)) throw std::invalid_argument("noise variance must be positive");
        if (!(sigma1_sq > sigma0_sq))
            throw std::invalid_argument("signal-plus-noise variance must exceed noise variance");
    }

    /// SNR is sigma_s_sq / sigma0_sq, so sigma1_sq = sigma0_sq * (1 + 10^(dB/10)).
    static EmissionModel from_snr_db(int k, double snr_db, double sigma0_sq) {
        return EmissionModel(k, sigma0_sq, sigma0_sq * (1.0 + std::pow(10.0, snr_db / 10.0)));
    }

    int k() const { return k_; }
    double sigma0_sq() const { return sigma0_sq_; }
    double sigma1_sq() const { return sigma1_sq_; }
    double sigma_sq(int state) const { return state == 0 ? sigma0_sq_ : sigma1_sq_; }
    double snr_linear() const { return (sigma1_sq_ - sigma0_sq_) / sigma0_sq_; }
    double snr_db() const { return 10.0 * std::log10(snr_linear()); }

    double sample_energy(int state, Stream& rng) const {
        std::gamma_distribution<double> gamma(static_cast<double>(k_), sigma_sq(state));
        return gamma(rng);
    }

    std::vector<double> sample_energies(std::span<const std::uint8_t> states, Stream& rng) const {
        std::vector<double> y(states.size());
        for (std::size_t i = 0; i < states.size(); ++i)
            y[i] = sample_energy(states[i], rng);
        return y;
    }

    /// Log density of Gamma(K, sigma_i^2) at y.
    double log_pdf(int state, double y) const {
        if (!(y > 0.0)) throw std::domain_error("energy must be positive");
        const double s = sigma_sq(state);
        const double k = static_cast<double>(k_);
        return (k - 1.0) * std::log(y) - y / s - k * std::log(s) - std::lgamma(k);
    }

    /// log b1(y) - log b0(y). Affine and strictly increasing in y.
    double log_pdf_ratio(double y) const {
        const double k = static_cast<double>(k_);
        return k * std::log(sigma0_sq_ / sigma1_sq_) +
               y * (sigma1_sq_ - sigma0_sq_) / (sigma1_sq_ * sigma0_sq_);
    }

    /// Regularized lower incomplete gamma at (K, y / sigma_i^2).
    double cdf(int state, double y) const {
        if (y < 0.0) throw std::domain_error("energy must be nonnegative");
        return regularized_gamma_p(static_cast<double>(k_), y / sigma_sq(state));
    }

    /// False-alarm probability of the slot detector at threshold theta_e.
    double pfa(double theta_e) const {
        if (theta_e < 0.0) throw std::domain_error("energy must be nonnegative");
        return regularized_gamma_q(static_cast<double>(k_), theta_e / sigma0_sq_);
    }

    /// Missed-detection probability of the slot detector at threshold theta_e.
    double pm(double theta_e) const {
        if (theta_e < 0.0) throw std::domain_error("energy must be nonnegative");
        return regularized_gamma_p(static_cast<double>(k_), theta_e / sigma1_sq_);
    }

private:
    int k_;
    double sigma0_sq_;
    double sigma1_sq_;
};

} // namespace specreuse
