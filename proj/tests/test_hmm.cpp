#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "specreuse/hmm.hpp"
#include "support.hpp"

using namespace specreuse;

namespace {

// Energy at which both state densities coincide, so the slot carries no
// state information.
double density_crossing(const EmissionModel& m) {
    return static_cast<double>(m.k()) * std::log(m.sigma1_sq() / m.sigma0_sq()) *
           m.sigma1_sq() * m.sigma0_sq() / (m.sigma1_sq() - m.sigma0_sq());
}

} // namespace

TEST_CASE("forward_init", "[hmm]") {
    SECTION("symmetric prior at the density crossing") {
        const EmissionModel m(10, 1.0, 2.0);
        const StationaryDistribution pi(0.5, 0.5);
        const auto s = forward_init(pi, m, density_crossing(m));
        CHECK(s.alpha[0] == Catch::Approx(0.5).epsilon(1e-12));
        CHECK(s.alpha[1] == Catch::Approx(0.5).epsilon(1e-12));
        CHECK(s.k == 1);
    }
    SECTION("near-uninformative observation returns the prior") {
        const auto m = EmissionModel::from_snr_db(10, -90.0, 1.0);
        const StationaryDistribution pi(1.0 / 11.0, 10.0 / 11.0);
        const auto s = forward_init(pi, m, 9.7);
        CHECK(s.alpha[1] == Catch::Approx(pi.pi1()).margin(1e-6));
    }
    SECTION("pinned against direct evaluation") {
        const EmissionModel m(10, 1.0, 2.0);
        const StationaryDistribution pi(1.0 / 11.0, 10.0 / 11.0);
        const auto s = forward_init(pi, m, 15.0);
        CHECK(s.alpha[0] == Catch::Approx(0.053600150009836906655).epsilon(1e-12));
        CHECK(s.alpha[1] == Catch::Approx(0.94639984999016309335).epsilon(1e-12));
        CHECK(s.log_evidence == Catch::Approx(-2.9010675307416395493).epsilon(1e-12));
    }
    SECTION("normalization always holds") {
        const EmissionModel m(10, 1.0, 2.0);
        const StationaryDistribution pi(0.3, 0.7);
        for (const double y : {1e-6, 0.5, 10.0, 500.0}) {
            const auto s = forward_init(pi, m, y);
            CHECK(s.alpha[0] + s.alpha[1] == Catch::Approx(1.0).margin(1e-12));
            CHECK(std::isfinite(s.log_evidence));
        }
    }
}

TEST_CASE("forward_step", "[hmm]") {
    const EmissionModel m(10, 1.0, 2.0);

    SECTION("uninformative observation is pure prediction") {
        const auto a = TransitionMatrix::from_rates(0.2, 0.05);
        ForwardState s;
        s.alpha = {0.3, 0.7};
        s.log_evidence = -1.0;
        s.k = 3;
        const auto next = forward_step(s, a, m, density_crossing(m));
        CHECK(next.alpha[0] == Catch::Approx(0.3 * a.a00() + 0.7 * a.a10()).epsilon(1e-12));
        CHECK(next.alpha[1] == Catch::Approx(0.3 * a.a01() + 0.7 * a.a11()).epsilon(1e-12));
        CHECK(next.k == 4);
    }
    SECTION("memoryless chain forgets the filtered state") {
        const auto a = TransitionMatrix::from_rates(0.5, 0.5);
        ForwardState s1, s2;
        s1.alpha = {0.99, 0.01};
        s2.alpha = {0.01, 0.99};
        const auto n1 = forward_step(s1, a, m, 7.0);
        const auto n2 = forward_step(s2, a, m, 7.0);
        CHECK(n1.alpha[0] == Catch::Approx(n2.alpha[0]).epsilon(1e-14));
        CHECK(n1.alpha[1] == Catch::Approx(n2.alpha[1]).epsilon(1e-14));
    }
}

TEST_CASE("llr boundaries and pinned value", "[hmm]") {
    const auto a = TransitionMatrix::from_rates(0.1, 0.01);

    CHECK(llr_from_alphas(a, 1.0, 0.0) == Catch::Approx(std::log(a.a01() / a.a00())).epsilon(1e-14));
    CHECK(llr_from_alphas(a, 0.0, 1.0) == Catch::Approx(std::log(a.a11() / a.a10())).epsilon(1e-14));
    CHECK(llr_from_alphas(a, 0.5, 0.5) == Catch::Approx(0.18048837571229365922).epsilon(1e-12));

    SECTION("invariant to forward-variable scaling") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> unit(1e-6, 1.0);
        for (int i = 0; i < 200; ++i) {
            const double a0 = unit(rng), a1 = unit(rng);
            const double c = std::exp(std::uniform_real_distribution<double>(-200, 200)(rng));
            CHECK(llr_from_alphas(a, c * a0, c * a1) ==
                  Catch::Approx(llr_from_alphas(a, a0, a1)).margin(1e-12));
        }
    }
}

TEST_CASE("llr_trace", "[hmm]") {
    const auto a = TransitionMatrix::from_rates(0.1, 0.01);
    const EmissionModel m(10, 1.0, 2.0);

    SECTION("single observation composes init and llr") {
        const std::vector<double> y{4.2};
        const auto t = llr_trace(a, m, y);
        REQUIRE(t.z.size() == 1);
        const auto s = forward_init(stationary_distribution(a), m, 4.2);
        CHECK(t.z[0] == Catch::Approx(llr(s, a)).epsilon(1e-14));
    }
    SECTION("empty input refused") {
        CHECK_THROWS_AS(llr_trace(a, m, std::vector<double>{}), std::invalid_argument);
    }
    SECTION("uninformative observations settle at the stationary log-odds") {
        const auto weak = EmissionModel::from_snr_db(10, -60.0, 1.0);
        const auto p = test_support::simulate_pipeline(a, weak, 2000, 11);
        const double target = std::log(10.0); // log(pi1/pi0)
        for (std::size_t k = 1000; k < p.z.z.size(); ++k)
            CHECK(p.z.z[k] == Catch::Approx(target).margin(1e-3));
    }
    SECTION("causality: appending observations never changes earlier values") {
        const auto p = test_support::simulate_pipeline(a, m, 60, 21);
        const auto full = p.z;
        const std::span<const double> head(p.energies.data(), 25);
        const auto prefix = llr_trace(a, m, head);
        for (std::size_t k = 0; k < prefix.z.size(); ++k)
            CHECK(prefix.z[k] == full.z[k]);
    }
    SECTION("log-odds stay inside the one-step range for slow switching") {
        std::mt19937_64 rng(31);
        for (int trial = 0; trial < 20; ++trial) {
            const auto at = test_support::random_slow_switching(rng);
            const auto mt = EmissionModel::from_snr_db(
                10, std::uniform_real_distribution<double>(-10, 10)(rng), 1.0);
            const auto p = test_support::simulate_pipeline(at, mt, 500, 1000 + trial);
            const double lo = std::log(at.a01() / at.a00());
            const double hi = std::log(at.a11() / at.a10());
            for (const double z : p.z.z) {
                CHECK(z >= lo);
                CHECK(z <= hi);
            }
        }
    }
    SECTION("filtered logit decomposes into previous log-odds plus the slot ratio") {
        const auto p = test_support::simulate_pipeline(a, m, 300, 41);
        ForwardState s = forward_init(stationary_distribution(a), m, p.energies[0]);
        for (std::size_t k = 1; k < p.energies.size(); ++k) {
            const double z_prev = llr(s, a);
            s = forward_step(s, a, m, p.energies[k]);
            const double lambda = std::log(s.alpha[1] / s.alpha[0]);
            CHECK(lambda == Catch::Approx(z_prev + m.log_pdf_ratio(p.energies[k])).margin(1e-10));
        }
    }
}

TEST_CASE("forward and smoothing match the enumeration oracle", "[hmm][oracle]") {
    std::mt19937_64 rng(2718);
    std::uniform_real_distribution<double> snr(-10.0, 10.0);
    std::uniform_int_distribution<int> len(1, 12);

    for (int trial = 0; trial < 50; ++trial) {
        const auto a = test_support::random_slow_switching(rng);
        const auto m = EmissionModel::from_snr_db(10, snr(rng), 1.0);
        const auto p = test_support::simulate_pipeline(a, m, len(rng), 5000 + trial);

        const auto oracle = brute_force_posteriors(a, m, p.energies);
        const auto smoothed = forward_backward(a, m, p.energies);

        for (std::size_t k = 0; k < p.energies.size(); ++k) {
            REQUIRE(p.z.z[k] == Catch::Approx(oracle.z[k]).margin(1e-9));
            REQUIRE(smoothed.gamma1[k] == Catch::Approx(oracle.gamma1[k]).margin(1e-9));
        }
    }
}

TEST_CASE("forward_backward", "[hmm]") {
    const auto a = TransitionMatrix::from_rates(0.1, 0.01);
    const EmissionModel m(10, 1.0, 2.0);

    SECTION("single slot reduces to the filtered posterior") {
        const std::vector<double> y{12.5};
        const auto sm = forward_backward(a, m, y);
        const auto s = forward_init(stationary_distribution(a), m, 12.5);
        REQUIRE(sm.gamma1.size() == 1);
        CHECK(sm.gamma1[0] == Catch::Approx(s.alpha[1]).epsilon(1e-12));
    }
    SECTION("uninformative emissions give the stationary marginal") {
        const auto weak = EmissionModel::from_snr_db(10, -80.0, 1.0);
        const auto p = test_support::simulate_pipeline(a, weak, 200, 3);
        const auto sm = forward_backward(a, weak, p.energies);
        for (const double g : sm.gamma1) CHECK(g == Catch::Approx(10.0 / 11.0).margin(1e-4));
    }
    SECTION("hard decisions follow the 0.5 rule") {
        const auto p = test_support::simulate_pipeline(a, m, 500, 123);
        const auto sm = forward_backward(a, m, p.energies);
        for (std::size_t k = 0; k < sm.gamma1.size(); ++k)
            CHECK(sm.q_hat[k] == (sm.gamma1[k] >= 0.5 ? 1 : 0));
    }
}

TEST_CASE("baum_welch", "[hmm][em]") {
    const auto truth_a = TransitionMatrix::from_rates(0.1, 0.01);
    const auto truth_m = EmissionModel::from_snr_db(10, 10.0, 1.0);

    SECTION("log-likelihood is nondecreasing") {
        const auto p = test_support::simulate_pipeline(truth_a, truth_m, 5000, 97);
        const auto res = baum_welch(p.energies, TransitionMatrix::from_rates(0.3, 0.2),
                                    EmissionModel(10, 0.5, 20.0), 40, 1e-10);
        REQUIRE(res.log_likelihood.size() >= 2);
        for (std::size_t i = 1; i < res.log_likelihood.size(); ++i)
            CHECK(res.log_likelihood[i] >= res.log_likelihood[i - 1] - 1e-8);
        CHECK(res.emission.sigma1_sq() > res.emission.sigma0_sq());
    }
    SECTION("initializing at the generating parameters barely moves them") {
        const auto p = test_support::simulate_pipeline(truth_a, truth_m, 50000, 55);
        const auto res = baum_welch(p.energies, truth_a, truth_m, 2, 0.0);
        CHECK(res.a.a01() == Catch::Approx(truth_a.a01()).margin(0.02));
        CHECK(res.a.a10() == Catch::Approx(truth_a.a10()).margin(0.02));
        CHECK(res.emission.sigma0_sq() == Catch::Approx(truth_m.sigma0_sq()).margin(0.1));
        CHECK(res.emission.sigma1_sq() == Catch::Approx(truth_m.sigma1_sq()).margin(0.5));
    }
    SECTION("recovers the transition rates from data") {
        const auto p = test_support::simulate_pipeline(truth_a, truth_m, 20000, 8);
        const auto res = baum_welch(p.energies, TransitionMatrix::from_rates(0.25, 0.05),
                                    EmissionModel(10, 0.5, 5.0), 100, 1e-9);
        CHECK(res.a.a01() == Catch::Approx(0.1).margin(0.05));
        CHECK(res.a.a10() == Catch::Approx(0.01).margin(0.05));
    }
    SECTION("degenerate responsibilities are an error") {
        const std::vector<double> y{1e6, 1e6};
        CHECK_THROWS_WITH(baum_welch(y, truth_a, EmissionModel(10, 1.0, 2.0), 5, 1e-8),
                          "degenerate component");
    }
    SECTION("needs at least two observations") {
        const std::vector<double> y{1.0};
        CHECK_THROWS_AS(baum_welch(y, truth_a, truth_m, 5, 1e-8), std::invalid_argument);
    }
}

TEST_CASE("brute force oracle self-checks", "[hmm][oracle]") {
    const auto a = TransitionMatrix::from_rates(0.1, 0.01);
    const EmissionModel m(10, 1.0, 2.0);

    SECTION("single slot agrees with forward_init exactly") {
        const std::vector<double> y{9.0};
        const auto oracle = brute_force_posteriors(a, m, y);
        const auto s = forward_init(stationary_distribution(a), m, 9.0);
        CHECK(oracle.gamma1[0] == Catch::Approx(s.alpha[1]).epsilon(1e-12));
        CHECK(oracle.z[0] == Catch::Approx(llr(s, a)).epsilon(1e-12));
        CHECK(oracle.log_evidence == Catch::Approx(s.log_evidence).epsilon(1e-12));
    }
    SECTION("total probability: evidence matches the recursive normalizers") {
        const auto p = test_support::simulate_pipeline(a, m, 12, 66);
        const auto oracle = brute_force_posteriors(a, m, p.energies);
        ForwardState s = forward_init(stationary_distribution(a), m, p.energies[0]);
        for (std::size_t k = 1; k < p.energies.size(); ++k)
            s = forward_step(s, a, m, p.energies[k]);
        CHECK(oracle.log_evidence == Catch::Approx(s.log_evidence).margin(1e-9));
    }
    SECTION("refuses long sequences") {
        const std::vector<double> y(17, 1.0);
        CHECK_THROWS_AS(brute_force_posteriors(a, m, y), std::invalid_argument);
    }
}
