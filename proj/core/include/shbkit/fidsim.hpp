// Free-induction decay from the Bloch-vector ensemble integral, its analytic
// decay law, and T2 extraction from measured traces.
//
// After the excitation pulse (t = 0, r1 = 0, r2 = 1) each detuning class
// precesses and decays; the emitted field is the Lorentzian-weighted phase
// integral e^{-t/T2} * Int e^{-i delta t} g(delta) d delta, which collapses
// to an amplitude decay at rate pi (2 gamma_hom + gamma_laser).
#pragma once

#include <span>
#include <vector>

#include "shbkit/fitcore.hpp"

namespace shbkit {

struct EnsembleSpec {
    double gamma_hom_hz = 273e3;
    double gamma_laser_hz = 200e3;
    double detuning_cutoff = 50.0;  // integration cutoff in multiples of Gamma_g

    double gamma_g_hz() const { return gamma_hom_hz + gamma_laser_hz; }
    void validate() const;  // non-negative rates, positive sum, cutoff >= 20
};

struct BlochState {
    double r1 = 0.0;
    double r2 = 1.0;
    double r3 = 0.0;
};

struct FidTrace {
    std::vector<double> times_s;   // from pulse end, strictly increasing, >= 0
    std::vector<double> intensity;  // normalized to 1 at t = 0
};

// r1 = -e^{-t/T2} sin(delta t), r2 = e^{-t/T2} cos(delta t).
BlochState bloch_free_evolution(double t_s, double delta_rad_per_s, double t2_s);

// tau_FID = 1 / [2 pi (2 gamma_hom + gamma_laser)]  (1/e time of intensity)
double tau_fid(double gamma_hom_hz, double gamma_laser_hz);

// T2 = 4 / (1/tau_FID - 2 pi gamma_laser). Throws when laser-limited.
double t2_from_fid(double tau_fid_s, double gamma_laser_hz);

// Numerically evaluates the ensemble phase integral on a symmetric detuning
// grid (cutoff * Gamma_g, analytic tail correction), squares to intensity and
// normalizes at t = 0. Throws NumericalError when the integral changes by
// more than 0.1% between the cutoff and twice the cutoff.
FidTrace synthesize_fid(const EnsembleSpec& spec, std::span<const double> times_s);

// Single-exponential fit of the intensity. Result names: amplitude, tau_fid_s.
FitResult fit_fid(const FidTrace& trace);

}  // namespace shbkit
