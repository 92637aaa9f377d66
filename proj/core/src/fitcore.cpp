#include "shbkit/fitcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>

namespace shbkit {

namespace {

std::string format_params(std::span<const double> p) {
    std::ostringstream oss;
    oss << "[";
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) oss << ", ";
        oss << p[i];
    }
    oss << "]";
    return oss.str();
}

// Gaussian elimination with partial pivoting; false when singular.
bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b,
                 std::vector<double>& out) {
    const std::size_t n = b.size();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(a[i][i]));
    if (scale <= 0.0) return false;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) <= 1e-14 * scale) return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    out.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * out[j];
        out[i] = s / a[i][i];
    }
    return true;
}

// Inverse via Gauss-Jordan; false when singular.
bool invert_dense(std::vector<std::vector<double>> a, std::vector<std::vector<double>>& inv) {
    const std::size_t n = a.size();
    inv.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::fabs(a[i][i]));
    if (scale <= 0.0) return false;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (std::fabs(a[pivot][col]) <= 1e-14 * scale) return false;
        std::swap(a[col], a[pivot]);
        std::swap(inv[col], inv[pivot]);
        const double d = a[col][col];
        for (std::size_t c = 0; c < n; ++c) {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return true;
}

struct Workspace {
    std::vector<double> weights;
    std::vector<double> residuals;           // y - model
    std::vector<std::vector<double>> jac;    // n x k, d model / d p
};

double eval_residuals(const ModelFn& model, const Dataset& data, std::span<const double> p,
                      Workspace& ws) {
    const std::size_t n = data.x.size();
    ws.residuals.resize(n);
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = model(data.x[i], p);
        if (!std::isfinite(f))
            throw FitError("model returned a non-finite value at parameters " + format_params(p),
                           {p.begin(), p.end()});
        ws.residuals[i] = data.y[i] - f;
        cost += ws.weights[i] * ws.residuals[i] * ws.residuals[i];
    }
    return cost;
}

void eval_jacobian(const ModelFn& model, const JacobianFn& jac, const Dataset& data,
                   std::span<const double> p, Workspace& ws) {
    const std::size_t n = data.x.size();
    const std::size_t k = p.size();
    ws.jac.assign(n, std::vector<double>(k, 0.0));
    if (jac) {
        for (std::size_t i = 0; i < n; ++i) jac(data.x[i], p, ws.jac[i]);
        return;
    }
    // Central finite differences, step max(1e-8, 1e-6 |p_j|).
    std::vector<double> pp(p.begin(), p.end());
    for (std::size_t j = 0; j < k; ++j) {
        const double h = std::max(1e-8, 1e-6 * std::fabs(pp[j]));
        const double saved = pp[j];
        pp[j] = saved + h;
        std::vector<double> hi(n), lo(n);
        for (std::size_t i = 0; i < n; ++i) hi[i] = model(data.x[i], pp);
        pp[j] = saved - h;
        for (std::size_t i = 0; i < n; ++i) lo[i] = model(data.x[i], pp);
        pp[j] = saved;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = (hi[i] - lo[i]) / (2.0 * h);
            if (!std::isfinite(d))
                throw FitError("non-finite finite-difference Jacobian at parameters " +
                                   format_params(p),
                               {p.begin(), p.end()});
            ws.jac[i][j] = d;
        }
    }
}

void clamp_to_bounds(std::vector<double>& p, const FitOptions& opt) {
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (!opt.lower.empty()) p[j] = std::max(p[j], opt.lower[j]);
        if (!opt.upper.empty()) p[j] = std::min(p[j], opt.upper[j]);
    }
}

}  // namespace

double FitResult::value(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return values[i];
    throw ValidationError("unknown fit parameter '" + std::string(name) + "'");
}

double FitResult::sigma(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return sigmas[i];
    throw ValidationError("unknown fit parameter '" + std::string(name) + "'");
}

void Dataset::validate(std::size_t n_free) const {
    if (x.size() != y.size())
        throw ValidationError("dataset x/y size mismatch");
    if (!sigma_y.empty() && sigma_y.size() != x.size())
        throw ValidationError("dataset sigma_y size mismatch");
    if (x.size() < n_free + 1)
        throw ValidationError("dataset has " + std::to_string(x.size()) +
                              " points, need at least " + std::to_string(n_free + 1));
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw ValidationError("non-finite dataset value at row " + std::to_string(i));
        if (!sigma_y.empty() && (!std::isfinite(sigma_y[i]) || sigma_y[i] <= 0.0))
            throw ValidationError("non-positive sigma_y at row " + std::to_string(i));
    }
}

FitResult least_squares(const ModelFn& model, const JacobianFn& jac, const Dataset& data,
                        std::vector<double> init, const FitOptions& options) {
    const std::size_t k = init.size();
    if (k == 0) throw ValidationError("least_squares requires at least one parameter");
    data.validate(k);
    if (!options.lower.empty() && options.lower.size() != k)
        throw ValidationError("lower bounds size mismatch");
    if (!options.upper.empty() && options.upper.size() != k)
        throw ValidationError("upper bounds size mismatch");
    for (std::size_t j = 0; j < k; ++j) {
        if (!options.lower.empty() && init[j] < options.lower[j])
            throw ValidationError("initial parameter " + std::to_string(j) + " below lower bound");
        if (!options.upper.empty() && init[j] > options.upper[j])
            throw ValidationError("initial parameter " + std::to_string(j) + " above upper bound");
    }

    const std::size_t n = data.x.size();
    Workspace ws;
    ws.weights.resize(n, 1.0);
    if (!data.sigma_y.empty())
        for (std::size_t i = 0; i < n; ++i) ws.weights[i] = 1.0 / (data.sigma_y[i] * data.sigma_y[i]);

    std::vector<double> p = std::move(init);
    double cost = eval_residuals(model, data, p, ws);
    double lambda = options.lambda0;
    bool converged = false;
    int iterations = 0;

    std::vector<double> grad(k), step, trial;
    std::vector<std::vector<double>> normal(k, std::vector<double>(k, 0.0));
    Workspace trial_ws;
    trial_ws.weights = ws.weights;

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        iterations = iter;
        eval_jacobian(model, jac, data, p, ws);

        // grad = J^T W r, normal = J^T W J
        std::fill(grad.begin(), grad.end(), 0.0);
        for (auto& row : normal) std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double wr = ws.weights[i] * ws.residuals[i];
            for (std::size_t a = 0; a < k; ++a) {
                grad[a] += ws.jac[i][a] * wr;
                const double wja = ws.weights[i] * ws.jac[i][a];
                for (std::size_t b = a; b < k; ++b) normal[a][b] += wja * ws.jac[i][b];
            }
        }
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < a; ++b) normal[a][b] = normal[b][a];

        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::fabs(g));
        if (gmax < options.grad_tol || cost == 0.0) {
            converged = true;
            break;
        }

        // Solve in the column-scaled space where the normal matrix has unit
        // diagonal; mixed parameter units (Hz vs od vs s) otherwise push the
        // pivots below any sensible singularity threshold.
        std::vector<double> col_scale(k);
        for (std::size_t a = 0; a < k; ++a)
            col_scale[a] = normal[a][a] > 0.0 ? std::sqrt(normal[a][a]) : 1.0;
        auto solve_damped = [&](double damping, std::vector<double>& out) {
            std::vector<std::vector<double>> scaled(k, std::vector<double>(k, 0.0));
            std::vector<double> rhs(k);
            for (std::size_t a = 0; a < k; ++a) {
                for (std::size_t b = 0; b < k; ++b)
                    scaled[a][b] = normal[a][b] / (col_scale[a] * col_scale[b]);
                scaled[a][a] += damping;
                rhs[a] = grad[a] / col_scale[a];
            }
            if (!solve_dense(std::move(scaled), std::move(rhs), out)) return false;
            for (std::size_t a = 0; a < k; ++a) out[a] /= col_scale[a];
            return true;
        };

        // Damped step; escalate lambda on singular solves and cost increases.
        bool accepted = false;
        while (true) {
            if (!solve_damped(lambda, step)) {
                lambda *= 10.0;
                if (lambda > options.lambda_max)
                    throw FitError("singular normal equations after maximum damping escalations",
                                   p);
                continue;
            }
            trial = p;
            for (std::size_t j = 0; j < k; ++j) trial[j] += step[j];
            clamp_to_bounds(trial, options);
            double trial_cost = eval_residuals(model, data, trial, trial_ws);
            if (trial_cost <= cost) {
                // The undamped step from the same linearization lands exactly
                // on the optimum of quadratic costs; take it when it is
                // at least as good.
                std::vector<double> gn_step;
                if (lambda > 0.0 && solve_damped(0.0, gn_step)) {
                    std::vector<double> gn_trial = p;
                    for (std::size_t j = 0; j < k; ++j) gn_trial[j] += gn_step[j];
                    clamp_to_bounds(gn_trial, options);
                    Workspace gn_ws;
                    gn_ws.weights = ws.weights;
                    const double gn_cost = eval_residuals(model, data, gn_trial, gn_ws);
                    if (gn_cost <= trial_cost) {
                        trial = std::move(gn_trial);
                        trial_cost = gn_cost;
                        trial_ws.residuals = gn_ws.residuals;
                    }
                }
                const double rel_change =
                    (cost - trial_cost) / std::max(cost, std::numeric_limits<double>::min());
                p = trial;
                cost = trial_cost;
                ws.residuals = trial_ws.residuals;
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                if (rel_change < options.cost_tol) converged = true;
                break;
            }
            lambda *= 10.0;
            if (lambda > options.lambda_max) break;  // stalled; report non-convergence
        }
        if (!accepted || converged) break;
    }

    FitResult result;
    result.names = options.names;
    if (result.names.size() != k) {
        result.names.resize(k);
        for (std::size_t j = 0; j < k; ++j)
            if (result.names[j].empty()) result.names[j] = "p" + std::to_string(j);
    }
    result.values = p;
    result.residual_norm = std::sqrt(cost);
    result.converged = converged;
    result.iterations = iterations;

    // Covariance (J^T W J)^-1 scaled by the reduced chi-square, inverted in
    // the same column-scaled space as the step solves.
    eval_jacobian(model, jac, data, p, ws);
    for (auto& row : normal) std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < k; ++a) {
            const double wja = ws.weights[i] * ws.jac[i][a];
            for (std::size_t b = a; b < k; ++b) normal[a][b] += wja * ws.jac[i][b];
        }
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < a; ++b) normal[a][b] = normal[b][a];
    std::vector<double> scale(k);
    for (std::size_t a = 0; a < k; ++a)
        scale[a] = normal[a][a] > 0.0 ? std::sqrt(normal[a][a]) : 1.0;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) normal[a][b] /= scale[a] * scale[b];
    result.sigmas.assign(k, 0.0);
    std::vector<std::vector<double>> cov;
    if (invert_dense(normal, cov)) {
        const double red_chi2 = n > k ? cost / static_cast<double>(n - k) : 1.0;
        for (std::size_t j = 0; j < k; ++j)
            result.sigmas[j] =
                std::sqrt(std::max(0.0, cov[j][j] * red_chi2)) / scale[j];
    } else {
        for (std::size_t j = 0; j < k; ++j)
            result.sigmas[j] = std::numeric_limits<double>::infinity();
    }
    return result;
}

std::vector<double> initial_guess_exponential(const Dataset& data) {
    data.validate(2);
    // Log-linear regression over the positive range.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < data.x.size(); ++i) {
        if (data.y[i] <= 0.0) continue;
        const double ly = std::log(data.y[i]);
        sx += data.x[i];
        sy += ly;
        sxx += data.x[i] * data.x[i];
        sxy += data.x[i] * ly;
        ++m;
    }
    if (m < 2) throw ValidationError("exponential guess: fewer than two positive points");
    const double denom = m * sxx - sx * sx;
    if (denom <= 0.0) throw ValidationError("exponential guess: degenerate abscissa");
    const double slope = (m * sxy - sx * sy) / denom;
    if (!(slope < 0.0))
        throw ValidationError("exponential guess: no decay (non-negative log-linear slope)");
    return {data.y.front(), -1.0 / slope};
}

std::vector<double> initial_guess_lorentzian(const Dataset& data) {
    data.validate(4);
    const std::size_t n = data.x.size();
    // Baseline: median of the outer 20% of points.
    std::size_t edge = std::max<std::size_t>(1, n / 10);
    std::vector<double> outer;
    for (std::size_t i = 0; i < edge; ++i) outer.push_back(data.y[i]);
    for (std::size_t i = n - edge; i < n; ++i) outer.push_back(data.y[i]);
    std::sort(outer.begin(), outer.end());
    const double baseline = outer[outer.size() / 2];

    std::size_t peak = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (std::fabs(data.y[i] - baseline) > std::fabs(data.y[peak] - baseline)) peak = i;
    const double amp = data.y[peak] - baseline;
    if (amp == 0.0) throw ValidationError("lorentzian guess: feature not resolved (flat trace)");
    const double half = std::fabs(amp) / 2.0;

    auto crossing = [&](bool left) -> double {
        const std::ptrdiff_t stride = left ? -1 : 1;
        std::ptrdiff_t i = static_cast<std::ptrdiff_t>(peak);
        while (true) {
            const std::ptrdiff_t next = i + stride;
            if (next < 0 || next >= static_cast<std::ptrdiff_t>(n))
                throw ValidationError("lorentzian guess: feature not resolved (no half-depth crossing)");
            const double a = std::fabs(data.y[i] - baseline);
            const double b = std::fabs(data.y[next] - baseline);
            if (a >= half && b < half) {
                const double t = (a - half) / (a - b);
                return data.x[i] + t * (data.x[next] - data.x[i]);
            }
            i = next;
        }
    };
    const double xl = crossing(true);
    const double xr = crossing(false);
    return {data.x[peak], xr - xl, amp, baseline};
}

namespace models {

double exponential(double x, std::span<const double> p) {
    return p[0] * std::exp(-x / p[1]);
}

void exponential_jac(double x, std::span<const double> p, std::span<double> grad) {
    const double e = std::exp(-x / p[1]);
    grad[0] = e;
    grad[1] = p[0] * x / (p[1] * p[1]) * e;
}

double biexponential(double x, std::span<const double> p) {
    return p[0] * std::exp(-x / p[1]) + p[2] * std::exp(-x / p[3]);
}

void biexponential_jac(double x, std::span<const double> p, std::span<double> grad) {
    const double e1 = std::exp(-x / p[1]);
    const double e2 = std::exp(-x / p[3]);
    grad[0] = e1;
    grad[1] = p[0] * x / (p[1] * p[1]) * e1;
    grad[2] = e2;
    grad[3] = p[2] * x / (p[3] * p[3]) * e2;
}

double lorentzian(double x, std::span<const double> p) {
    const double hw = p[1] / 2.0;
    const double d = x - p[0];
    return p[3] + p[2] * hw * hw / (d * d + hw * hw);
}

void lorentzian_jac(double x, std::span<const double> p, std::span<double> grad) {
    const double hw = p[1] / 2.0;
    const double d = x - p[0];
    const double den = d * d + hw * hw;
    grad[0] = p[2] * hw * hw * 2.0 * d / (den * den);
    grad[1] = 0.5 * p[2] * 2.0 * hw * d * d / (den * den);
    grad[2] = hw * hw / den;
    grad[3] = 1.0;
}

}  // namespace models

}  // namespace shbkit
