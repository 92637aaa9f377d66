// Shared nonlinear least-squares engine (damped Gauss-Newton with
// Levenberg-Marquardt style adaptive damping) plus the small model library
// used by every fit in the toolkit.
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "shbkit/errors.hpp"

namespace shbkit {

// Fit failures carry the last parameter iterate for diagnostics.
class FitError : public NumericalError {
public:
    FitError(const std::string& what, std::vector<double> last_params)
        : NumericalError(what), last_params(std::move(last_params)) {}
    std::vector<double> last_params;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> values;
    std::vector<double> sigmas;  // 1-sigma from (J^T W J)^-1 scaled by reduced chi-square
    double residual_norm = 0.0;  // sqrt(sum of weighted squared residuals)
    bool converged = false;
    int iterations = 0;

    double value(std::string_view name) const;
    double sigma(std::string_view name) const;
};

struct Dataset {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sigma_y;  // optional; empty = unit weights

    // Throws ValidationError unless sizes match, values are finite and
    // there are at least n_free + 1 points.
    void validate(std::size_t n_free) const;
};

// y = model(x, params). Gradient fills grad[j] = dy/dparams[j].
using ModelFn = std::function<double(double, std::span<const double>)>;
using JacobianFn = std::function<void(double, std::span<const double>, std::span<double>)>;

struct FitOptions {
    int max_iterations = 200;
    double cost_tol = 1e-10;   // relative cost change on an accepted step
    double grad_tol = 1e-8;    // max-norm of the cost gradient
    double lambda0 = 1e-3;     // initial damping; x10 on reject, /10 on accept
    double lambda_max = 1e12;
    std::vector<double> lower;  // optional box bounds (empty = unbounded)
    std::vector<double> upper;
    std::vector<std::string> names;  // parameter names for the FitResult
};

// Minimizes sum_i w_i (y_i - model(x_i, p))^2 with w_i = 1/sigma_i^2.
// jac may be empty; central finite differences with step
// max(1e-8, 1e-6 |p_j|) are used instead.
FitResult least_squares(const ModelFn& model, const JacobianFn& jac, const Dataset& data,
                        std::vector<double> init, const FitOptions& options = {});

// Heuristic starting points.
//   exponential: {amplitude, tau} with amplitude = y at the smallest x and
//     tau from a log-linear regression over the positive-y range.
//   lorentzian: {center, fwhm, amplitude, baseline}; baseline from the outer
//     20% of points, FWHM from the half-depth crossings. amplitude is signed
//     (negative = dip). Throws "feature not resolved" without a crossing.
std::vector<double> initial_guess_exponential(const Dataset& data);
std::vector<double> initial_guess_lorentzian(const Dataset& data);

namespace models {

// p = {amplitude, tau}: y = amplitude * exp(-x/tau)
double exponential(double x, std::span<const double> p);
void exponential_jac(double x, std::span<const double> p, std::span<double> grad);

// p = {a1, tau1, a2, tau2}: y = a1 exp(-x/tau1) + a2 exp(-x/tau2)
double biexponential(double x, std::span<const double> p);
void biexponential_jac(double x, std::span<const double> p, std::span<double> grad);

// p = {center, fwhm, amplitude, baseline}:
// y = baseline + amplitude * (fwhm/2)^2 / ((x-center)^2 + (fwhm/2)^2)
double lorentzian(double x, std::span<const double> p);
void lorentzian_jac(double x, std::span<const double> p, std::span<double> grad);

}  // namespace models

}  // namespace shbkit
