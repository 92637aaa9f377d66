// Spectral-diffusion (phase-memory) model T_M(B, T) with phonon-driven
// spin-flip and spin flip-flop channels, and its weighted fit against
// measured coherence data.
#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "shbkit/fitcore.hpp"

namespace shbkit {

struct PhysConstants {
    static constexpr double mu_b = 9.2740100783e-24;   // Bohr magneton, J/T
    static constexpr double k_b = 1.380649e-23;        // Boltzmann constant, J/K
};

struct SdParams {
    double a_d = 0.0;          // Hz^2/T^5, phonon-driven spin flips
    double b_f = 4.2e10;       // Hz^2, spin flip-flops
    double c0 = 0.0;           // Hz^2, field-independent term
    double gamma0_hz = 259.8e3;  // SD-free homogeneous linewidth
    double g_env = 4.6;        // environmental g-factor

    void validate() const;  // all >= 0, gamma0 > 0
};

enum class CoherenceMethod { HoleBurning, FID };

struct CoherencePoint {
    double field_t;
    double temperature_k;
    double t2_s;
    double t2_sigma_s;  // <= 0 means unspecified; the fit then weights by t2
    CoherenceMethod method;

    void validate() const;
};

// gamma_SD * R = [a_D g^3 B^5 coth(x) + b_F g^4 sech^2(x) + c0] sech^2(x),
// x = g mu_B B / (2 k_B T). The coth term vanishes as B^4 at zero field and
// is evaluated by its series there.
double gamma_sd_r(double field_t, double temperature_k, const SdParams& p);

// T_M = (2 gamma0 / y)(-1 + sqrt(1 + y / (pi gamma0^2))), y = gamma_SD R,
// with the series limit 1/(pi gamma0) - y/(4 pi^2 gamma0^3) for small y.
double t_m(double field_t, double temperature_k, const SdParams& p);

struct SdFit {
    SdParams params;
    FitResult fit;  // names: a_d, b_f, c0, gamma0_hz, g_env
};

// Parameter names accepted in `frozen`: a_d, b_f, c0, gamma0, g_env.
// b_F and g_env are degenerate at a single temperature (only b_F g^4
// enters), so g_env should stay frozen unless the data span temperatures.
std::set<std::string> default_frozen(std::span<const CoherencePoint> data);

// Weighted least squares of T_M(B, T; p) against t2 with weights 1/sigma^2
// (sigma = t2 when unspecified, i.e. relative residuals). a_d, b_f and
// gamma0 are fitted on a log scale; a free b_f/gamma0 needs a positive
// starting value, while a free a_d starting at 0 is seeded to perturb the
// strongest-field point by a tenth of its flip-flop term.
SdFit fit_sd(std::span<const CoherencePoint> data, const SdParams& init,
             const std::set<std::string>& frozen);

}  // namespace shbkit
