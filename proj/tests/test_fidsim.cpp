#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "shbkit/fidsim.hpp"

using namespace shbkit;

namespace {

std::vector<double> time_grid(double t_max, std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = t_max * static_cast<double>(i) / static_cast<double>(n - 1);
    return t;
}

}  // namespace

TEST_CASE("free Bloch evolution") {
    const auto start = bloch_free_evolution(0.0, 12345.0, 1e-6);
    CHECK(start.r1 == 0.0);
    CHECK(start.r2 == 1.0);

    const auto decayed = bloch_free_evolution(1e-6, 0.0, 1e-6);
    CHECK(decayed.r1 == 0.0);
    CHECK(decayed.r2 == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

    const double t = 0.4e-6;
    const double delta = std::numbers::pi / 2.0 / t;  // quarter rotation
    const auto quarter = bloch_free_evolution(t, delta, 1e-6);
    CHECK(quarter.r2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(quarter.r1 == doctest::Approx(-std::exp(-t / 1e-6)).epsilon(1e-12));

    CHECK_THROWS_AS(bloch_free_evolution(-1.0, 0.0, 1e-6), ValidationError);
    CHECK_THROWS_AS(bloch_free_evolution(1.0, 0.0, 0.0), ValidationError);
}

TEST_CASE("Bloch norm never exceeds one") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> t_dist(0.0, 5e-6);
    std::uniform_real_distribution<double> delta(-1e8, 1e8);
    std::uniform_real_distribution<double> t2(1e-8, 1e-5);
    for (int i = 0; i < 1000; ++i) {
        const auto r = bloch_free_evolution(t_dist(rng), delta(rng), t2(rng));
        CHECK(r.r1 * r.r1 + r.r2 * r.r2 + r.r3 * r.r3 <= 1.0 + 1e-12);
    }
}

TEST_CASE("FID time constant") {
    // Frozen oracle value; cross-checks the measured 211.3 ns within 1%.
    CHECK(tau_fid(273e3, 200e3) == doctest::Approx(2.1334442774e-07).epsilon(1e-10));
    CHECK(std::fabs(tau_fid(273e3, 200e3) - 211.3e-9) / 211.3e-9 < 0.01);
    CHECK(tau_fid(50e3, 0.0) ==
          doctest::Approx(1.0 / (4.0 * std::numbers::pi * 50e3)).epsilon(1e-14));
    const double g = 77e3;
    CHECK(tau_fid(g, g) == doctest::Approx(1.0 / (6.0 * std::numbers::pi * g)).epsilon(1e-14));
    CHECK_THROWS_AS(tau_fid(0.0, 0.0), ValidationError);
}

TEST_CASE("coherence time from the FID decay") {
    CHECK(t2_from_fid(211.3e-9, 200e3) == doctest::Approx(1.1507577175e-06).epsilon(1e-10));
    // Reference coherence time for this trace is 1.15 us.
    CHECK(std::fabs(t2_from_fid(211.3e-9, 200e3) - 1.15e-6) / 1.15e-6 < 0.01);
    CHECK(t2_from_fid(3.3e-7, 0.0) == doctest::Approx(4.0 * 3.3e-7).epsilon(1e-14));
    const double gl = 150e3;
    CHECK_THROWS_AS(t2_from_fid(1.0 / (2.0 * std::numbers::pi * gl), gl), ValidationError);
}

TEST_CASE("tau_fid and t2_from_fid are exact algebraic inverses") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> gamma(5e3, 5e6);
    std::uniform_real_distribution<double> laser(0.0, 400e3);
    for (int i = 0; i < 200; ++i) {
        const double gh = gamma(rng);
        const double gl = laser(rng);
        const double t2 = t2_from_fid(tau_fid(gh, gl), gl);
        CHECK(t2 == doctest::Approx(1.0 / (std::numbers::pi * gh)).epsilon(1e-12));
    }
}

TEST_CASE("synthesized FID follows the analytic decay law") {
    EnsembleSpec spec;
    spec.gamma_hom_hz = 273e3;
    spec.gamma_laser_hz = 200e3;
    const double tau = tau_fid(spec.gamma_hom_hz, spec.gamma_laser_hz);
    const auto times = time_grid(5.0 * tau, 60);
    const auto trace = synthesize_fid(spec, times);

    CHECK(trace.intensity[0] == 1.0);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double analytic = std::exp(-times[i] / tau);
        CHECK(std::fabs(trace.intensity[i] - analytic) / analytic < 0.01);
    }
    // 1/e point in particular.
    const auto at_tau = synthesize_fid(spec, std::vector<double>{0.0, tau});
    CHECK(at_tau.intensity[1] == doctest::Approx(std::exp(-1.0)).epsilon(0.01));
}

TEST_CASE("laser-free limit decays at 4 pi gamma in intensity") {
    EnsembleSpec spec;
    spec.gamma_hom_hz = 150e3;
    spec.gamma_laser_hz = 0.0;
    const double rate = 4.0 * std::numbers::pi * spec.gamma_hom_hz;
    const auto times = time_grid(3.0 / rate, 30);
    const auto trace = synthesize_fid(spec, times);
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double analytic = std::exp(-rate * times[i]);
        CHECK(std::fabs(trace.intensity[i] - analytic) / analytic < 0.01);
    }
}

TEST_CASE("ensemble spec validation") {
    EnsembleSpec narrow;
    narrow.detuning_cutoff = 19.0;
    CHECK_THROWS_AS(narrow.validate(), ValidationError);
    EnsembleSpec ok;
    ok.detuning_cutoff = 20.0;
    CHECK_NOTHROW(ok.validate());
    EnsembleSpec bad;
    bad.gamma_hom_hz = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    EnsembleSpec spec;
    CHECK_THROWS_AS(synthesize_fid(spec, std::vector<double>{0.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(synthesize_fid(spec, std::vector<double>{-1e-9, 1e-9}), ValidationError);
    CHECK_THROWS_AS(synthesize_fid(spec, std::vector<double>{}), ValidationError);
}

TEST_CASE("fit_fid") {
    SUBCASE("clean 211.3 ns decay") {
        FidTrace trace;
        for (int i = 0; i < 50; ++i) {
            const double t = i * 12e-9;
            trace.times_s.push_back(t);
            trace.intensity.push_back(std::exp(-t / 211.3e-9));
        }
        const auto fit = fit_fid(trace);
        CHECK(fit.value("tau_fid_s") == doctest::Approx(211.3e-9).epsilon(1e-4));
    }
    SUBCASE("3% noise keeps tau within 5% across seeds") {
        int failures = 0;
        for (unsigned seed = 0; seed < 120; ++seed) {
            std::mt19937 rng(seed);
            std::normal_distribution<double> noise(0.0, 0.03);
            FidTrace trace;
            for (int i = 0; i < 150; ++i) {
                const double t = i * 2.5 * 211.3e-9 / 149.0;
                trace.times_s.push_back(t);
                trace.intensity.push_back(std::exp(-t / 211.3e-9) + noise(rng));
            }
            const auto fit = fit_fid(trace);
            if (std::fabs(fit.value("tau_fid_s") - 211.3e-9) / 211.3e-9 > 0.05) ++failures;
        }
        CHECK(failures == 0);
    }
    SUBCASE("rising trace is rejected") {
        FidTrace trace;
        for (int i = 0; i < 10; ++i) {
            trace.times_s.push_back(i * 1e-9);
            trace.intensity.push_back(0.1 * i + 0.1);
        }
        CHECK_THROWS_AS(fit_fid(trace), ValidationError);
    }
}

TEST_CASE("round trip: T2 -> synthesis -> fit -> T2 within 2%") {
    for (double t2 : {0.5e-6, 1.17e-6, 4e-6}) {
        const double gamma_hom = 1.0 / (std::numbers::pi * t2);
        EnsembleSpec spec;
        spec.gamma_hom_hz = gamma_hom;
        spec.gamma_laser_hz = 200e3;
        const double tau = tau_fid(spec.gamma_hom_hz, spec.gamma_laser_hz);
        const auto trace = synthesize_fid(spec, time_grid(3.0 * tau, 48));
        const auto fit = fit_fid(trace);
        const double recovered = t2_from_fid(fit.value("tau_fid_s"), spec.gamma_laser_hz);
        CHECK(std::fabs(recovered - t2) / t2 < 0.02);
    }
}
