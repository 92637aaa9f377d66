// Three-manifold (g/e/b) rate-equation dynamics for the pump-wait-read
// protocol: closed-form steady state, adaptive integration, hole-area
// kinetics and lifetime extraction.
//
//   dn_g/dt = -R_e n_g + (1-beta) n_e / T1 + n_b / Tb
//   dn_e/dt =  R_e n_g - n_e / T1
//   dn_b/dt =  beta n_e / T1 - n_b / Tb
//
// with R_e the OD-averaged excitation rate, switched per schedule segment.
#pragma once

#include <vector>

#include "shbkit/fitcore.hpp"

namespace shbkit {

struct RateParams {
    double re0_per_s = 1000.0;   // bare excitation rate R_{e,0}
    double t1_s = 1.0e-3;        // e-level lifetime
    double tb_s = 6.3e-3;        // bottleneck lifetime
    double beta = 0.3;           // branching ratio into |b>
    double od = 1.12;            // on-resonance optical depth
    double pump_bw_hz = 200e3;   // effective pump bandwidth
    double gamma_inh_hz = 1.29e9;

    void validate() const;
};

struct PopulationState {
    double n_g = 1.0;
    double n_e = 0.0;
    double n_b = 0.0;

    double sum() const { return n_g + n_e + n_b; }
    void validate(double tol = 1e-9) const;  // each in [0,1], sum within tol of 1
};

struct PumpSchedule {
    double tau_pump_s = 3.0e-4;   // burn 300 us in SHB mode
    double tau_delay_s = 1.0e-5;  // wait 10 us
    double read_window_s = 1.2e-3;

    void validate() const;  // all non-negative
};

// OD averaging: re0 (1 - e^{-od}) / od, series 1 - od/2 + od^2/6 below 1e-6.
double effective_rate(double re0_per_s, double od);

// min(1, pump_bw / gamma_inh)
double addressed_fraction(double pump_bw_hz, double gamma_inh_hz);

// n_g = 1/D, n_e = Re T1 / D, n_b = beta Re Tb / D,
// D = 1 + Re T1 + beta Re Tb, Re = effective_rate(re0, od).
PopulationState steady_state(const RateParams& p);

struct StepControl {
    double abs_tol = 1e-10;  // absolute tolerance on populations
    double max_dt_s = 0.0;   // 0 = unconstrained
    std::size_t max_steps = 2'000'000;
};

// Step-control breakdown carries the last accepted state.
class IntegrationError : public NumericalError {
public:
    IntegrationError(const std::string& what, double last_time_s, PopulationState last_state)
        : NumericalError(what), last_time_s(last_time_s), last_state(last_state) {}
    double last_time_s;
    PopulationState last_state;
};

struct TracePoint {
    double time_s;
    PopulationState populations;
};

// Integrates pump (R_e on), delay (off) and read (off) segments with an
// adaptive embedded Runge-Kutta pair; every accepted step is recorded.
std::vector<TracePoint> integrate(const RateParams& p, const PumpSchedule& schedule,
                                  const PopulationState& initial,
                                  const StepControl& control = {});

// Integrated spectral hole area, proportional to the addressed fraction
// times the mean bottleneck population over the read window (the value at
// read start when the window is zero). Model units: the constant of
// proportionality is fixed to 1.
double hole_area(const RateParams& p, const PumpSchedule& schedule,
                 const StepControl& control = {});

// Exponential decay fit of a time trace; bi-exponential when requested.
// Result names: amplitude, lifetime_s (plus amplitude2, lifetime2_s).
FitResult fit_lifetime(const Dataset& trace, bool biexponential = false);

}  // namespace shbkit
