#include "shbkit/fidsim.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace shbkit {

namespace {

constexpr double kPi = std::numbers::pi;

// Sine integral Si(x) = int_0^x sin(u)/u du. Power series below 20, optimally
// truncated asymptotic expansion above; both give better than 1e-8 absolute,
// far below the share of the Lorentzian tail in the ensemble integral.
double sine_integral(double x) {
    if (x < 0.0) return -sine_integral(-x);
    if (x < 20.0) {
        double term = x;
        double sum = x;
        const double x2 = x * x;
        for (int k = 1; k < 60; ++k) {
            term *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
            sum += term / (2.0 * k + 1.0);
            if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
        }
        return sum;
    }
    // Si(x) = pi/2 - f(x) cos(x) - g(x) sin(x)
    const double inv_x2 = 1.0 / (x * x);
    double f = 0.0, g = 0.0;
    double term_f = 1.0 / x, term_g = inv_x2;
    double prev_f = 1e300, prev_g = 1e300;
    for (int k = 0; k < 12; ++k) {
        if (std::fabs(term_f) < prev_f) {
            f += term_f;
            prev_f = std::fabs(term_f);
        }
        if (std::fabs(term_g) < prev_g) {
            g += term_g;
            prev_g = std::fabs(term_g);
        }
        term_f *= -(2.0 * k + 1.0) * (2.0 * k + 2.0) * inv_x2;
        term_g *= -(2.0 * k + 2.0) * (2.0 * k + 3.0) * inv_x2;
    }
    return kPi / 2.0 - f * std::cos(x) - g * std::sin(x);
}

struct PhaseIntegrand {
    double t;
    double half_gamma;  // Gamma_rad / 2

    // cos(delta t) * g(delta), g a unit-area Lorentzian in rad/s.
    double operator()(double delta) const {
        const double lor = half_gamma / (kPi * (delta * delta + half_gamma * half_gamma));
        return std::cos(delta * t) * lor;
    }
};

double adaptive_simpson(const PhaseIntegrand& f, double a, double b, double fa, double fb,
                        double fm, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, fm, flm, tol / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, fm, fb, frm, tol / 2.0, depth - 1);
}

// I(t) = int e^{-i delta t} g(delta) d delta over the truncated symmetric
// window [-C, C] plus the analytic 1/delta^2 tail beyond it.
double phase_integral(double t, double gamma_rad, double cutoff_rad) {
    const PhaseIntegrand f{t, gamma_rad / 2.0};

    // Panels no wider than half an oscillation and than the core width.
    double panel = gamma_rad / 2.0;
    if (t > 0.0) panel = std::min(panel, kPi / (4.0 * t));
    const int n_panels = std::max(16, static_cast<int>(std::ceil(cutoff_rad / panel)));
    const double w = cutoff_rad / n_panels;

    double core = 0.0;
    double fa = f(0.0);
    for (int i = 0; i < n_panels; ++i) {
        const double a = i * w;
        const double b = a + w;
        const double fb = f(b);
        const double fm = f(0.5 * (a + b));
        core += adaptive_simpson(f, a, b, fa, fb, fm, 1e-12, 24);
        fa = fb;
    }
    core *= 2.0;  // even integrand

    // Beyond the cutoff g(delta) ~ Gamma / (2 pi delta^2):
    // 2 int_C^inf cos(dt) / d^2 dd = 2 [cos(Ct)/C - t (pi/2 - Si(Ct))].
    const double x = cutoff_rad * t;
    const double tail = gamma_rad / kPi *
                        (std::cos(x) / cutoff_rad - t * (kPi / 2.0 - sine_integral(x)));
    return core + tail;
}

}  // namespace

void EnsembleSpec::validate() const {
    if (!(gamma_hom_hz > 0.0)) throw ValidationError("fid: gamma_hom must be positive");
    if (!(gamma_laser_hz >= 0.0)) throw ValidationError("fid: gamma_laser must be non-negative");
    if (!(detuning_cutoff >= 20.0))
        throw ValidationError("fid: detuning cutoff must be at least 20 Gamma_g");
}

BlochState bloch_free_evolution(double t_s, double delta_rad_per_s, double t2_s) {
    if (t_s < 0.0) throw ValidationError("bloch_free_evolution: t must be non-negative");
    if (!(t2_s > 0.0)) throw ValidationError("bloch_free_evolution: T2 must be positive");
    const double damp = std::exp(-t_s / t2_s);
    return {-damp * std::sin(delta_rad_per_s * t_s), damp * std::cos(delta_rad_per_s * t_s), 0.0};
}

double tau_fid(double gamma_hom_hz, double gamma_laser_hz) {
    if (gamma_hom_hz < 0.0 || gamma_laser_hz < 0.0)
        throw ValidationError("tau_fid: linewidths must be non-negative");
    const double total = 2.0 * gamma_hom_hz + gamma_laser_hz;
    if (!(total > 0.0)) throw ValidationError("undamped FID");
    return 1.0 / (2.0 * kPi * total);
}

double t2_from_fid(double tau_fid_s, double gamma_laser_hz) {
    if (!(tau_fid_s > 0.0)) throw ValidationError("t2_from_fid: tau must be positive");
    const double denom = 1.0 / tau_fid_s - 2.0 * kPi * gamma_laser_hz;
    if (!(denom > 0.0)) throw ValidationError("laser-limited FID");
    return 4.0 / denom;
}

FidTrace synthesize_fid(const EnsembleSpec& spec, std::span<const double> times_s) {
    spec.validate();
    if (times_s.empty()) throw ValidationError("synthesize_fid: empty time grid");
    if (times_s.front() < 0.0) throw ValidationError("synthesize_fid: times must start at >= 0");
    for (std::size_t i = 1; i < times_s.size(); ++i)
        if (!(times_s[i] > times_s[i - 1]))
            throw ValidationError("synthesize_fid: times must be strictly increasing");

    const double gamma_rad = 2.0 * kPi * spec.gamma_g_hz();
    const double cutoff = spec.detuning_cutoff * gamma_rad;
    const double t2 = 1.0 / (kPi * spec.gamma_hom_hz);

    const double amp0 = phase_integral(0.0, gamma_rad, cutoff);

    FidTrace trace;
    trace.times_s.assign(times_s.begin(), times_s.end());
    trace.intensity.resize(times_s.size());
    for (std::size_t i = 0; i < times_s.size(); ++i) {
        const double t = times_s[i];
        const double integral = phase_integral(t, gamma_rad, cutoff);
        const double check = phase_integral(t, gamma_rad, 2.0 * cutoff);
        if (std::fabs(integral - check) > std::max(1e-3 * std::fabs(check), 1e-9 * amp0))
            throw NumericalError(
                "synthesize_fid: ensemble integral not converged at the configured cutoff");
        const double amplitude = std::exp(-t / t2) * integral / amp0;
        trace.intensity[i] = amplitude * amplitude;
    }
    return trace;
}

FitResult fit_fid(const FidTrace& trace) {
    if (trace.times_s.size() < 6)
        throw ValidationError("fit_fid: need at least 6 points");
    Dataset data;
    data.x = trace.times_s;
    data.y = trace.intensity;
    const auto init = initial_guess_exponential(data);

    FitOptions options;
    options.names = {"amplitude", "tau_fid_s"};
    auto result = least_squares(models::exponential, models::exponential_jac, data, init, options);
    if (!result.converged)
        throw FitError("fit_fid: no convergence after " + std::to_string(result.iterations) +
                           " iterations",
                       result.values);
    return result;
}

}  // namespace shbkit
