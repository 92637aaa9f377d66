#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "shbkit/holesim.hpp"

using namespace shbkit;

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

// Grid that is exactly symmetric about zero.
std::vector<double> symmetric_grid(double half_span, std::size_t half_points) {
    std::vector<double> grid;
    for (std::size_t i = half_points; i > 0; --i)
        grid.push_back(-half_span * static_cast<double>(i) / static_cast<double>(half_points));
    grid.push_back(0.0);
    for (std::size_t i = 1; i <= half_points; ++i)
        grid.push_back(half_span * static_cast<double>(i) / static_cast<double>(half_points));
    return grid;
}

}  // namespace

TEST_CASE("hole width formula") {
    SUBCASE("weak-burn narrow hole reproduces the measured 746 kHz") {
        BroadeningParams p;
        p.gamma_hom_hz = 273e3;
        p.gamma_laser_hz = 200e3;
        p.rabi_rad_per_s = 0.0;
        CHECK(hole_fwhm(p) == doctest::Approx(746e3).epsilon(1e-12));
    }
    SUBCASE("chi = 0, no laser: exactly twice the homogeneous width") {
        BroadeningParams p;
        p.gamma_hom_hz = 123.4e3;
        p.gamma_laser_hz = 0.0;
        CHECK(hole_fwhm(p) == doctest::Approx(2.0 * 123.4e3).epsilon(1e-14));
    }
    SUBCASE("saturation term: chi^2 T1 T2 = 3 gives three gamma_hom") {
        BroadeningParams p;
        p.gamma_hom_hz = 100e3;
        p.gamma_laser_hz = 0.0;
        p.t1_s = 1e-3;
        p.t2_s = 1e-3;
        p.rabi_rad_per_s = std::sqrt(3.0 / (p.t1_s * p.t2_s));
        CHECK(hole_fwhm(p) == doctest::Approx(300e3).epsilon(1e-12));
    }
    SUBCASE("non-positive gamma_hom rejected") {
        BroadeningParams p;
        p.gamma_hom_hz = 0.0;
        CHECK_THROWS_AS(hole_fwhm(p), ValidationError);
    }
    SUBCASE("t2 above 2 t1 rejected") {
        BroadeningParams p;
        p.t1_s = 1e-3;
        p.t2_s = 2.5e-3;
        CHECK_THROWS_AS(p.validate(), ValidationError);
    }
}

TEST_CASE("hole width to coherence time") {
    // Frozen oracle value for the narrowest measured hole.
    CHECK(t2_from_hole(746.10e3, 200e3) == doctest::Approx(1.1657567705e-06).epsilon(1e-9));
    CHECK(t2_from_hole(746.10e3, 200e3) ==
          doctest::Approx(oracle::t2_from_hole(746.10e3, 200e3)).epsilon(1e-14));
    // Degenerate boundary.
    CHECK_THROWS_AS(t2_from_hole(200e3, 200e3), ValidationError);
    CHECK_THROWS_AS(t2_from_hole(150e3, 200e3), ValidationError);
}

TEST_CASE("round trip: gamma_hom -> hole width -> T2 returns 1/(pi gamma_hom)") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> gamma(5e3, 5e6);
    std::uniform_real_distribution<double> laser(0.0, 500e3);
    for (int i = 0; i < 100; ++i) {
        BroadeningParams p;
        p.gamma_hom_hz = gamma(rng);
        p.gamma_laser_hz = laser(rng);
        const double t2 = t2_from_hole(hole_fwhm(p), p.gamma_laser_hz);
        CHECK(t2 == doctest::Approx(1.0 / (std::numbers::pi * p.gamma_hom_hz)).epsilon(1e-12));
    }
}

TEST_CASE("synthesized spectrum: degenerate pattern is a single Lorentzian dip") {
    const auto pattern = predict_hole_pattern(HyperfineModel{}, 0.0, false);
    BroadeningParams p;
    ClassLifetimes lifetimes;
    const auto grid = linspace(-20e6, 20e6, 801);
    const auto spectrum = synthesize_spectrum(pattern, p, 10e-6, lifetimes, grid, 1.12, 0.3);

    const auto min_it = std::min_element(spectrum.od.begin(), spectrum.od.end());
    const std::size_t min_idx = static_cast<std::size_t>(min_it - spectrum.od.begin());
    CHECK(spectrum.grid_hz[min_idx] == 0.0);

    // All classes coincide at zero detuning; depths add with their own decay.
    double depth = 0.0;
    for (const auto& f : realize_features(pattern, p, lifetimes, 0.3))
        depth += f.amplitude_od * std::exp(-10e-6 / f.decay_lifetime_s);
    CHECK(*min_it == doctest::Approx(1.12 - depth).epsilon(1e-12));

    // A single Lorentzian of the hole width describes the whole trace.
    const auto fit = fit_hole(spectrum);
    CHECK(fit.value("fwhm_hz") == doctest::Approx(hole_fwhm(p)).epsilon(1e-6));
    CHECK(fit.value("center_hz") == doctest::Approx(0.0).scale(1e3).epsilon(1e-9));
}

TEST_CASE("spectrum minimum equals the direct Lorentzian-sum evaluation") {
    const auto pattern = predict_hole_pattern(HyperfineModel{}, 1.2, false);
    BroadeningParams p;
    ClassLifetimes lifetimes;
    const auto grid = linspace(-90e6, 90e6, 3001);
    const auto features = realize_features(pattern, p, lifetimes, 0.25);
    const auto spectrum = synthesize_spectrum(features, 0.0, grid, 1.12);

    // Independent evaluation of the sum on the same grid.
    double expected_min = 1e300;
    for (double nu : grid) {
        double od = 1.12;
        for (const auto& f : features) {
            const double hw = f.fwhm_hz / 2.0;
            od -= f.sign * f.amplitude_od * hw * hw /
                  ((nu - f.detuning_hz) * (nu - f.detuning_hz) + hw * hw);
        }
        expected_min = std::min(expected_min, od);
    }
    CHECK(*std::min_element(spectrum.od.begin(), spectrum.od.end()) ==
          doctest::Approx(expected_min).epsilon(1e-12));
}

TEST_CASE("wait-time decay: inner clusters die with the X1 lifetime, outer survive") {
    const auto pattern = predict_hole_pattern(HyperfineModel{}, 2.0, false);
    BroadeningParams p;
    ClassLifetimes lifetimes;  // inner 0.85 ms, outer/central 6.21 ms
    const auto grid = linspace(-100e6, 100e6, 4001);

    auto depth_at = [&](double wait, double center) {
        const auto spectrum =
            synthesize_spectrum(pattern, p, wait, lifetimes, grid, 1.12, 0.3);
        // Fit a window around the feature.
        std::vector<double> x, y;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (std::fabs(grid[i] - center) < 2.5e6) {
                x.push_back(grid[i]);
                y.push_back(spectrum.od[i]);
            }
        return fit_hole(x, y).value("depth_od");
    };

    const double inner_member = 51.2e6 - 3.05e6;
    const double outer_member = 83.2e6 - 2.35e6;
    const double ratio_inner = depth_at(2.5e-3, inner_member) / depth_at(0.0, inner_member);
    const double ratio_outer = depth_at(2.5e-3, outer_member) / depth_at(0.0, outer_member);
    CHECK(ratio_inner == doctest::Approx(std::exp(-2.5 / 0.85)).epsilon(0.02));
    CHECK(ratio_outer == doctest::Approx(std::exp(-2.5 / 6.21)).epsilon(0.02));
}

TEST_CASE("hole area decays single-exponentially with the class lifetime") {
    const auto pattern = predict_hole_pattern(HyperfineModel{}, 2.0, false);
    BroadeningParams p;
    ClassLifetimes lifetimes;
    const auto grid = linspace(-100e6, 100e6, 4001);

    Dataset decay;
    for (double wait : {0.0, 2e-4, 5e-4, 1e-3, 1.5e-3, 2e-3, 3e-3}) {
        const auto spectrum =
            synthesize_spectrum(pattern, p, wait, lifetimes, grid, 1.12, 0.3);
        std::vector<double> x, y;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (std::fabs(grid[i] - 48.15e6) < 2.5e6) {
                x.push_back(grid[i]);
                y.push_back(spectrum.od[i]);
            }
        const auto fit = fit_hole(x, y);
        decay.x.push_back(wait);
        // Area of a unit-peak Lorentzian is pi/2 fwhm depth.
        decay.y.push_back(fit.value("depth_od") * fit.value("fwhm_hz"));
    }
    const auto fit = least_squares(models::exponential, models::exponential_jac, decay,
                                   initial_guess_exponential(decay));
    REQUIRE(fit.converged);
    CHECK(fit.values[1] == doctest::Approx(0.85e-3).epsilon(0.01));
}

TEST_CASE("superposition: spectra are linear in feature amplitudes without clamping") {
    BroadeningParams p;
    const auto grid = linspace(-30e6, 30e6, 601);
    std::vector<HoleFeature> f1{{-5e6, +1, 0.2, 746e3, 6.21e-3}};
    std::vector<HoleFeature> f2{{7e6, +1, 0.3, 746e3, 0.85e-3}, {0.0, -1, 0.1, 746e3, 6.21e-3}};
    std::vector<HoleFeature> both;
    both.insert(both.end(), f1.begin(), f1.end());
    both.insert(both.end(), f2.begin(), f2.end());

    const auto s1 = synthesize_spectrum(f1, 1e-4, grid, 2.0);
    const auto s2 = synthesize_spectrum(f2, 1e-4, grid, 2.0);
    const auto s12 = synthesize_spectrum(both, 1e-4, grid, 2.0);
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(s12.od[i] == doctest::Approx(s1.od[i] + s2.od[i] - 2.0).epsilon(1e-12));
}

TEST_CASE("spectrum symmetry on a symmetric grid") {
    const auto pattern = predict_hole_pattern(HyperfineModel{}, 1.7, true);
    BroadeningParams p;
    ClassLifetimes lifetimes;
    const auto grid = symmetric_grid(95e6, 1200);
    const auto spectrum = synthesize_spectrum(pattern, p, 2e-3, lifetimes, grid, 1.12, 0.25);
    const std::size_t n = grid.size();
    // Mirror features contribute in a different summation order, so agreement
    // holds to rounding, not bit-exactly.
    for (std::size_t i = 0; i < n; ++i)
        CHECK(spectrum.od[i] == doctest::Approx(spectrum.od[n - 1 - i]).epsilon(1e-14));
}

TEST_CASE("clamping keeps the optical depth non-negative") {
    std::vector<HoleFeature> features{{0.0, +1, 5.0, 1e6, 1.0}};
    const auto grid = linspace(-10e6, 10e6, 201);
    const auto spectrum = synthesize_spectrum(features, 0.0, grid, 1.0);
    for (double od : spectrum.od) CHECK(od >= 0.0);
    CHECK(*std::min_element(spectrum.od.begin(), spectrum.od.end()) == 0.0);
}

TEST_CASE("grid too narrow lists the truncated features") {
    const auto pattern = predict_hole_pattern(HyperfineModel{}, 2.0, false);
    BroadeningParams p;
    ClassLifetimes lifetimes;
    const auto grid = linspace(-60e6, 60e6, 601);  // outer clusters at +-83 MHz fall outside
    CHECK_THROWS_WITH_AS(
        synthesize_spectrum(pattern, p, 0.0, lifetimes, grid, 1.12, 0.3),
        doctest::Contains("truncated"), ValidationError);
}

TEST_CASE("antihole visibility gate") {
    CHECK_FALSE(antiholes_visible(10e-6, 0.85e-3));
    CHECK(antiholes_visible(1e-3, 0.85e-3));
    CHECK_FALSE(antiholes_visible(1e-3, 0.85e-3, 2.0));
    CHECK(antiholes_visible(2e-3, 0.85e-3, 2.0));
}

TEST_CASE("fit_hole: noiseless self-consistency") {
    const std::vector<double> truth{1.0e5, 746.10e3, -0.4, 1.12};
    Dataset data;
    for (double x : linspace(-5e6, 5e6, 201)) {
        data.x.push_back(x);
        data.y.push_back(models::lorentzian(x, truth));
    }
    const auto fit = fit_hole(data.x, data.y);
    CHECK(fit.value("center_hz") == doctest::Approx(1.0e5).epsilon(1e-6));
    CHECK(fit.value("fwhm_hz") == doctest::Approx(746.10e3).epsilon(1e-6));
    CHECK(fit.value("depth_od") == doctest::Approx(0.4).epsilon(1e-6));
    CHECK(fit.value("baseline_od") == doctest::Approx(1.12).epsilon(1e-6));
}

TEST_CASE("fit_hole: 1% noise keeps the width within 5% across seeds") {
    const std::vector<double> truth{0.0, 746.10e3, -0.4, 1.12};
    const auto grid = linspace(-3e6, 3e6, 401);
    int failures = 0;
    for (unsigned seed = 0; seed < 120; ++seed) {
        std::mt19937 rng(seed);
        std::normal_distribution<double> noise(0.0, 0.01);
        Dataset data;
        for (double x : grid) {
            data.x.push_back(x);
            data.y.push_back(models::lorentzian(x, truth) + noise(rng));
        }
        const auto fit = fit_hole(data.x, data.y);
        if (std::fabs(fit.value("fwhm_hz") - 746.10e3) / 746.10e3 > 0.05) ++failures;
    }
    CHECK(failures == 0);
}

TEST_CASE("fit_hole rejects degenerate traces") {
    Dataset flat;
    for (double x : linspace(0.0, 1.0, 32)) {
        flat.x.push_back(x);
        flat.y.push_back(1.0);
    }
    CHECK_THROWS_AS(fit_hole(flat.x, flat.y), ValidationError);

    std::vector<double> tiny_x{0, 1, 2}, tiny_y{1, 0, 1};
    CHECK_THROWS_AS(fit_hole(tiny_x, tiny_y), ValidationError);  // fewer than 8 points
}
