// Hole-burning spectrum synthesis (power broadening, time-resolved decay of
// the feature classes), Lorentzian hole fitting, and the hole-width to
// coherence-time conversion.
#pragma once

#include <span>
#include <vector>

#include "shbkit/fitcore.hpp"
#include "shbkit/levelmodel.hpp"

namespace shbkit {

struct BroadeningParams {
    double gamma_hom_hz = 273e3;
    double gamma_laser_hz = 200e3;
    double rabi_rad_per_s = 0.0;  // on-resonance Rabi frequency chi
    double t1_s = 0.85e-3;
    double t2_s = 0.0;  // 0 = derive 1/(pi gamma_hom)

    double effective_t2_s() const;
    void validate() const;  // positive rates; t2 <= 2 t1 when both supplied
};

// gamma_hole = gamma_hom (1 + sqrt(1 + chi^2 T1 T2)) + gamma_laser.
// Reduces to 2 gamma_hom + gamma_laser in the weak-burn limit chi = 0.
double hole_fwhm(const BroadeningParams& p);

// T2 = 2 / [pi (gamma_hole - gamma_laser)]. Throws when the hole is
// laser-limited (gamma_hole <= gamma_laser).
double t2_from_hole(double gamma_hole_hz, double gamma_laser_hz);

struct ClassLifetimes {
    double central_s = 6.21e-3;
    double inner_s = 0.85e-3;   // inner clusters decay with the X1 lifetime
    double outer_s = 6.21e-3;
    double antihole_s = 6.21e-3;

    double for_class(FeatureClass cls) const;
};

// Anti-holes require spontaneous decay out of X1, so they are emitted only
// once the wait exceeds `multiple` times the X1 lifetime.
bool antiholes_visible(double wait_s, double x1_lifetime_s, double multiple = 1.0);

struct HoleFeature {
    double detuning_hz;
    int sign;              // +1 hole, -1 anti-hole
    double amplitude_od;   // depth in optical-depth units at wait = 0
    double fwhm_hz;
    double decay_lifetime_s;
};

struct HoleSpectrum {
    std::vector<double> grid_hz;  // strictly increasing, relative to burn
    std::vector<double> od;
    double baseline_od = 0.0;
};

// Attaches width, depth and lifetime to each pattern feature. depth_od
// scales the pattern weights (central feature depth = depth_od).
std::vector<HoleFeature> realize_features(const HolePattern& pattern,
                                          const BroadeningParams& p,
                                          const ClassLifetimes& lifetimes, double depth_od);

// od(nu) = baseline - sum_i sign_i A_i e^{-wait/tau_i} L(nu - nu_i; fwhm_i)
// with unit-peak Lorentzians, clamped at zero from below. Throws when the
// grid does not span every feature (message lists the truncated detunings).
HoleSpectrum synthesize_spectrum(std::span<const HoleFeature> features, double wait_s,
                                 std::span<const double> grid_hz, double baseline_od);

HoleSpectrum synthesize_spectrum(const HolePattern& pattern, const BroadeningParams& p,
                                 double wait_s, const ClassLifetimes& lifetimes,
                                 std::span<const double> grid_hz, double baseline_od,
                                 double depth_od);

// Single-Lorentzian-plus-constant least-squares fit of a measured hole.
// Result names: center_hz, fwhm_hz, depth_od, baseline_od.
FitResult fit_hole(std::span<const double> grid_hz, std::span<const double> od);
FitResult fit_hole(const HoleSpectrum& trace);

}  // namespace shbkit
