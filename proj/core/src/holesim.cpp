#include "shbkit/holesim.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace shbkit {

double BroadeningParams::effective_t2_s() const {
    return t2_s > 0.0 ? t2_s : 1.0 / (std::numbers::pi * gamma_hom_hz);
}

void BroadeningParams::validate() const {
    if (!(gamma_hom_hz > 0.0)) throw ValidationError("broadening: gamma_hom must be positive");
    if (!(gamma_laser_hz >= 0.0) || !std::isfinite(gamma_laser_hz))
        throw ValidationError("broadening: gamma_laser must be non-negative");
    if (!(rabi_rad_per_s >= 0.0)) throw ValidationError("broadening: rabi must be non-negative");
    if (!(t1_s > 0.0)) throw ValidationError("broadening: t1 must be positive");
    if (t2_s > 0.0 && t2_s > 2.0 * t1_s + 1e-15 * t1_s)
        throw ValidationError("broadening: t2 exceeds 2 t1");
}

double hole_fwhm(const BroadeningParams& p) {
    p.validate();
    const double chi2t1t2 = p.rabi_rad_per_s * p.rabi_rad_per_s * p.t1_s * p.effective_t2_s();
    return p.gamma_hom_hz * (1.0 + std::sqrt(1.0 + chi2t1t2)) + p.gamma_laser_hz;
}

double t2_from_hole(double gamma_hole_hz, double gamma_laser_hz) {
    if (!(gamma_hole_hz > gamma_laser_hz))
        throw ValidationError("laser-limited hole, T2 unbounded");
    return 2.0 / (std::numbers::pi * (gamma_hole_hz - gamma_laser_hz));
}

double ClassLifetimes::for_class(FeatureClass cls) const {
    switch (cls) {
        case FeatureClass::Central: return central_s;
        case FeatureClass::InnerCluster: return inner_s;
        case FeatureClass::OuterCluster: return outer_s;
        case FeatureClass::AntiHole: return antihole_s;
    }
    return central_s;
}

bool antiholes_visible(double wait_s, double x1_lifetime_s, double multiple) {
    return wait_s > multiple * x1_lifetime_s;
}

std::vector<HoleFeature> realize_features(const HolePattern& pattern, const BroadeningParams& p,
                                          const ClassLifetimes& lifetimes, double depth_od) {
    if (!(depth_od >= 0.0)) throw ValidationError("realize_features: depth must be non-negative");
    const double fwhm = hole_fwhm(p);
    std::vector<HoleFeature> out;
    out.reserve(pattern.features.size());
    for (const auto& f : pattern.features)
        out.push_back({f.detuning_hz, f.sign, depth_od * f.weight, fwhm,
                       lifetimes.for_class(f.cls)});
    return out;
}

HoleSpectrum synthesize_spectrum(std::span<const HoleFeature> features, double wait_s,
                                 std::span<const double> grid_hz, double baseline_od) {
    if (wait_s < 0.0) throw ValidationError("synthesize_spectrum: wait must be non-negative");
    if (grid_hz.size() < 2) throw ValidationError("synthesize_spectrum: grid needs >= 2 points");
    for (std::size_t i = 1; i < grid_hz.size(); ++i)
        if (!(grid_hz[i] > grid_hz[i - 1]))
            throw ValidationError("synthesize_spectrum: grid must be strictly increasing");

    std::ostringstream truncated;
    bool any_truncated = false;
    for (const auto& f : features) {
        if (f.detuning_hz < grid_hz.front() || f.detuning_hz > grid_hz.back()) {
            truncated << (any_truncated ? ", " : "") << f.detuning_hz;
            any_truncated = true;
        }
    }
    if (any_truncated)
        throw ValidationError("synthesize_spectrum: grid too narrow, truncated features at [" +
                              truncated.str() + "] Hz");

    HoleSpectrum spectrum;
    spectrum.grid_hz.assign(grid_hz.begin(), grid_hz.end());
    spectrum.baseline_od = baseline_od;
    spectrum.od.resize(grid_hz.size());
    for (std::size_t i = 0; i < grid_hz.size(); ++i) {
        double od = baseline_od;
        for (const auto& f : features) {
            const double hw = f.fwhm_hz / 2.0;
            const double d = grid_hz[i] - f.detuning_hz;
            const double lorentz = hw * hw / (d * d + hw * hw);
            od -= f.sign * f.amplitude_od * std::exp(-wait_s / f.decay_lifetime_s) * lorentz;
        }
        spectrum.od[i] = std::max(0.0, od);  // passive medium, no gain
    }
    return spectrum;
}

HoleSpectrum synthesize_spectrum(const HolePattern& pattern, const BroadeningParams& p,
                                 double wait_s, const ClassLifetimes& lifetimes,
                                 std::span<const double> grid_hz, double baseline_od,
                                 double depth_od) {
    const auto features = realize_features(pattern, p, lifetimes, depth_od);
    return synthesize_spectrum(features, wait_s, grid_hz, baseline_od);
}

FitResult fit_hole(std::span<const double> grid_hz, std::span<const double> od) {
    if (grid_hz.size() < 8)
        throw ValidationError("fit_hole: need at least 8 points spanning the dip");
    Dataset data;
    data.x.assign(grid_hz.begin(), grid_hz.end());
    data.y.assign(od.begin(), od.end());

    auto init = initial_guess_lorentzian(data);
    FitOptions options;
    options.names = {"center_hz", "fwhm_hz", "amplitude_od", "baseline_od"};
    auto result = least_squares(models::lorentzian, models::lorentzian_jac, data, init, options);
    if (!result.converged)
        throw FitError("fit_hole: no convergence after " + std::to_string(result.iterations) +
                           " iterations",
                       result.values);

    // Report the dip depth as a positive number.
    result.names = {"center_hz", "fwhm_hz", "depth_od", "baseline_od"};
    result.values[1] = std::fabs(result.values[1]);
    result.values[2] = -result.values[2];
    return result;
}

FitResult fit_hole(const HoleSpectrum& trace) { return fit_hole(trace.grid_hz, trace.od); }

}  // namespace shbkit
