#include "shbkit/ratedyn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace shbkit {

namespace {

// State layout: {n_g, n_e, n_b, integral of n_b dt}. The quadrature slot
// feeds the read-window average in hole_area and costs nothing otherwise.
using State4 = std::array<double, 4>;

struct Rhs {
    double re;
    double inv_t1;
    double inv_tb;
    double beta;

    State4 operator()(const State4& s) const {
        return {-re * s[0] + (1.0 - beta) * inv_t1 * s[1] + inv_tb * s[2],
                re * s[0] - inv_t1 * s[1],
                beta * inv_t1 * s[1] - inv_tb * s[2],
                s[2]};
    }
};

PopulationState to_populations(const State4& s) { return {s[0], s[1], s[2]}; }

// Dormand-Prince 5(4) embedded pair. Error is controlled in absolute terms
// on the three populations only.
struct Stepper {
    Rhs rhs;
    double abs_tol;
    double max_dt;
    std::size_t* steps_used;
    std::size_t max_steps;

    template <typename Observer>
    void run(double t0, double duration, State4& y, Observer&& observe) const {
        if (duration <= 0.0) return;
        const double t_end = t0 + duration;
        const double timescale =
            std::min({1.0 / rhs.inv_t1, 1.0 / rhs.inv_tb,
                      rhs.re > 0.0 ? 1.0 / rhs.re : duration, duration});
        double dt = std::min(duration, 0.01 * timescale);
        double t = t0;
        int rejects_in_a_row = 0;

        while (t < t_end) {
            if (t_end - t <= 4.0 * std::numeric_limits<double>::epsilon() * t_end) break;
            dt = std::min(dt, t_end - t);
            if (max_dt > 0.0) dt = std::min(dt, max_dt);
            if (++*steps_used > max_steps)
                throw IntegrationError("rate integrator exceeded the step budget", t,
                                       to_populations(y));

            const State4 k1 = rhs(y);
            State4 tmp;
            auto axpy = [&](std::initializer_list<std::pair<double, const State4*>> terms) {
                for (int i = 0; i < 4; ++i) {
                    double v = y[i];
                    for (const auto& [c, k] : terms) v += dt * c * (*k)[i];
                    tmp[i] = v;
                }
            };

            axpy({{1.0 / 5, &k1}});
            const State4 k2 = rhs(tmp);
            axpy({{3.0 / 40, &k1}, {9.0 / 40, &k2}});
            const State4 k3 = rhs(tmp);
            axpy({{44.0 / 45, &k1}, {-56.0 / 15, &k2}, {32.0 / 9, &k3}});
            const State4 k4 = rhs(tmp);
            axpy({{19372.0 / 6561, &k1},
                  {-25360.0 / 2187, &k2},
                  {64448.0 / 6561, &k3},
                  {-212.0 / 729, &k4}});
            const State4 k5 = rhs(tmp);
            axpy({{9017.0 / 3168, &k1},
                  {-355.0 / 33, &k2},
                  {46732.0 / 5247, &k3},
                  {49.0 / 176, &k4},
                  {-5103.0 / 18656, &k5}});
            const State4 k6 = rhs(tmp);
            axpy({{35.0 / 384, &k1},
                  {500.0 / 1113, &k3},
                  {125.0 / 192, &k4},
                  {-2187.0 / 6784, &k5},
                  {11.0 / 84, &k6}});
            const State4 y5 = tmp;
            const State4 k7 = rhs(y5);

            double err = 0.0;
            for (int i = 0; i < 3; ++i) {
                const double y4_i =
                    y[i] + dt * (5179.0 / 57600 * k1[i] + 7571.0 / 16695 * k3[i] +
                                 393.0 / 640 * k4[i] - 92097.0 / 339200 * k5[i] +
                                 187.0 / 2100 * k6[i] + 1.0 / 40 * k7[i]);
                err = std::max(err, std::fabs(y5[i] - y4_i));
            }

            if (err <= abs_tol) {
                t += dt;
                y = y5;
                observe(t, y);
                rejects_in_a_row = 0;
                const double grow =
                    err > 0.0 ? 0.9 * std::pow(abs_tol / err, 0.2) : 5.0;
                dt *= std::clamp(grow, 0.2, 5.0);
            } else {
                if (++rejects_in_a_row > 60 || dt < 1e-15 * std::max(1.0, std::fabs(t)))
                    throw IntegrationError("step-control failure in the rate integrator", t,
                                           to_populations(y));
                dt *= std::clamp(0.9 * std::pow(abs_tol / err, 0.2), 0.1, 0.5);
            }
        }
    }
};

}  // namespace

void RateParams::validate() const {
    if (!(re0_per_s >= 0.0) || !std::isfinite(re0_per_s))
        throw ValidationError("rates: re0 must be non-negative");
    if (!(t1_s > 0.0)) throw ValidationError("rates: t1 must be positive");
    if (!(tb_s > 0.0)) throw ValidationError("rates: tb must be positive");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("rates: beta must be in [0, 1]");
    if (!(od >= 0.0)) throw ValidationError("rates: od must be non-negative");
    if (!(pump_bw_hz > 0.0)) throw ValidationError("rates: pump_bw must be positive");
    if (!(gamma_inh_hz > 0.0)) throw ValidationError("rates: gamma_inh must be positive");
}

void PopulationState::validate(double tol) const {
    for (double v : {n_g, n_e, n_b})
        if (!(v >= -1e-12 && v <= 1.0 + 1e-12))
            throw ValidationError("population outside [0, 1]");
    if (std::fabs(sum() - 1.0) > tol)
        throw ValidationError("populations do not sum to 1");
}

void PumpSchedule::validate() const {
    if (tau_pump_s < 0.0 || tau_delay_s < 0.0 || read_window_s < 0.0)
        throw ValidationError("schedule durations must be non-negative");
}

double effective_rate(double re0_per_s, double od) {
    if (od < 0.0) throw ValidationError("effective_rate: od must be non-negative");
    if (od < 1e-6) return re0_per_s * (1.0 - od / 2.0 + od * od / 6.0);
    return re0_per_s * (1.0 - std::exp(-od)) / od;
}

double addressed_fraction(double pump_bw_hz, double gamma_inh_hz) {
    if (!(pump_bw_hz > 0.0) || !(gamma_inh_hz > 0.0))
        throw ValidationError("addressed_fraction: bandwidths must be positive");
    return std::min(1.0, pump_bw_hz / gamma_inh_hz);
}

PopulationState steady_state(const RateParams& p) {
    p.validate();
    const double re = effective_rate(p.re0_per_s, p.od);
    const double d = 1.0 + re * p.t1_s + p.beta * re * p.tb_s;
    return {1.0 / d, re * p.t1_s / d, p.beta * re * p.tb_s / d};
}

std::vector<TracePoint> integrate(const RateParams& p, const PumpSchedule& schedule,
                                  const PopulationState& initial, const StepControl& control) {
    p.validate();
    schedule.validate();
    initial.validate();

    std::vector<TracePoint> trace;
    trace.push_back({0.0, initial});
    State4 y{initial.n_g, initial.n_e, initial.n_b, 0.0};
    std::size_t steps = 0;
    auto record = [&trace](double t, const State4& s) {
        trace.push_back({t, to_populations(s)});
    };

    const double re_pump = effective_rate(p.re0_per_s, p.od);
    const struct {
        double re;
        double duration;
    } segments[] = {{re_pump, schedule.tau_pump_s},
                    {0.0, schedule.tau_delay_s},
                    {0.0, schedule.read_window_s}};
    double t = 0.0;
    for (const auto& seg : segments) {
        Stepper stepper{{seg.re, 1.0 / p.t1_s, 1.0 / p.tb_s, p.beta},
                        control.abs_tol,
                        control.max_dt_s,
                        &steps,
                        control.max_steps};
        stepper.run(t, seg.duration, y, record);
        t += seg.duration;
    }
    return trace;
}

double hole_area(const RateParams& p, const PumpSchedule& schedule, const StepControl& control) {
    p.validate();
    schedule.validate();

    State4 y{1.0, 0.0, 0.0, 0.0};
    std::size_t steps = 0;
    auto ignore = [](double, const State4&) {};

    const double re_pump = effective_rate(p.re0_per_s, p.od);
    const double inv_t1 = 1.0 / p.t1_s;
    const double inv_tb = 1.0 / p.tb_s;

    Stepper pump{{re_pump, inv_t1, inv_tb, p.beta}, control.abs_tol, control.max_dt_s, &steps,
                 control.max_steps};
    pump.run(0.0, schedule.tau_pump_s, y, ignore);

    Stepper off{{0.0, inv_t1, inv_tb, p.beta}, control.abs_tol, control.max_dt_s, &steps,
                control.max_steps};
    off.run(schedule.tau_pump_s, schedule.tau_delay_s, y, ignore);

    const double f_spec = addressed_fraction(p.pump_bw_hz, p.gamma_inh_hz);
    if (schedule.read_window_s <= 0.0) return f_spec * y[2];

    const double q_start = y[3];
    off.run(schedule.tau_pump_s + schedule.tau_delay_s, schedule.read_window_s, y, ignore);
    return f_spec * (y[3] - q_start) / schedule.read_window_s;
}

FitResult fit_lifetime(const Dataset& trace, bool biexponential) {
    if (trace.x.size() < 6)
        throw ValidationError("fit_lifetime: need at least 6 points");
    const auto single = initial_guess_exponential(trace);

    FitOptions options;
    FitResult result;
    if (!biexponential) {
        options.names = {"amplitude", "lifetime_s"};
        result = least_squares(models::exponential, models::exponential_jac, trace, single,
                               options);
    } else {
        options.names = {"amplitude1", "lifetime1_s", "amplitude2", "lifetime2_s"};
        std::vector<double> init{0.7 * single[0], 0.5 * single[1], 0.3 * single[0],
                                 1.5 * single[1]};
        result = least_squares(models::biexponential, models::biexponential_jac, trace, init,
                               options);
    }
    if (!result.converged)
        throw FitError("fit_lifetime: no convergence after " + std::to_string(result.iterations) +
                           " iterations",
                       result.values);
    return result;
}

}  // namespace shbkit
