#pragma once

// Shared generators for the test suites. Everything is seeded explicitly so
// failures reproduce.

#include <cstdint>
#include <random>
#include <vector>

#include "specreuse/emission.hpp"
#include "specreuse/hmm.hpp"
#include "specreuse/markov.hpp"

namespace test_support {

inline specreuse::TransitionMatrix random_slow_switching(std::mt19937_64& rng,
                                                         double lo = 0.005, double hi = 0.5) {
    std::uniform_real_distribution<double> rate(lo, hi);
    for (;;) {
        const double a01 = rate(rng);
        const double a10 = rate(rng);
        if (a01 + a10 < 1.0) return specreuse::TransitionMatrix::from_rates(a01, a10);
    }
}

struct Pipeline {
    specreuse::StateTrace trace;
    std::vector<double> energies;
    specreuse::LlrTrace z;
};

/// States, energies, and causal log-odds for one realization.
inline Pipeline simulate_pipeline(const specreuse::TransitionMatrix& a,
                                  const specreuse::EmissionModel& m, std::int64_t n,
                                  std::uint64_t seed) {
    Pipeline p;
    p.trace = specreuse::sample_trace(a, n, seed);
    specreuse::Stream energy_rng = specreuse::make_stream(seed ^ 0xabcdef1234567890ULL);
    p.energies = m.sample_energies(p.trace.states, energy_rng);
    p.z = specreuse::llr_trace(a, m, p.energies);
    return p;
}

} // namespace test_support
