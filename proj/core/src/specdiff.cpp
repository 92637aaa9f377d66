#include "shbkit/specdiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace shbkit {

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<std::string>& param_names() {
    static const std::vector<std::string> names{"a_d", "b_f", "c0", "gamma0_hz", "g_env"};
    return names;
}

double get_param(const SdParams& p, std::size_t i) {
    switch (i) {
        case 0: return p.a_d;
        case 1: return p.b_f;
        case 2: return p.c0;
        case 3: return p.gamma0_hz;
        default: return p.g_env;
    }
}

void set_param(SdParams& p, std::size_t i, double v) {
    switch (i) {
        case 0: p.a_d = v; break;
        case 1: p.b_f = v; break;
        case 2: p.c0 = v; break;
        case 3: p.gamma0_hz = v; break;
        default: p.g_env = v; break;
    }
}

// a_d, b_f and gamma0 span many decades; they are fitted as logarithms.
bool log_scaled(std::size_t i) { return i == 0 || i == 1 || i == 3; }

}  // namespace

void SdParams::validate() const {
    for (double v : {a_d, b_f, c0, g_env})
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("spectral-diffusion parameters must be non-negative");
    if (!(gamma0_hz > 0.0)) throw ValidationError("gamma0 must be positive");
}

void CoherencePoint::validate() const {
    if (!(field_t >= 0.0)) throw ValidationError("coherence point: field must be non-negative");
    if (!(temperature_k > 0.0))
        throw ValidationError("coherence point: temperature must be positive");
    if (!(t2_s > 0.0)) throw ValidationError("coherence point: t2 must be positive");
}

double gamma_sd_r(double field_t, double temperature_k, const SdParams& p) {
    p.validate();
    if (!(temperature_k > 0.0)) throw ValidationError("gamma_sd_r: temperature must be positive");
    if (field_t < 0.0) throw ValidationError("gamma_sd_r: field must be non-negative");

    const double g = p.g_env;
    const double x = g * PhysConstants::mu_b * field_t / (2.0 * PhysConstants::k_b * temperature_k);
    const double sech = 1.0 / std::cosh(x);
    const double sech2 = sech * sech;

    // B^5 coth(x) vanishes as B^4 at zero field; the series keeps that limit
    // exact. Both magnetic channels vanish identically when g_env is zero.
    double spin_flip = 0.0;
    if (p.a_d > 0.0 && g > 0.0 && field_t > 0.0) {
        if (x < 1e-8) {
            const double b4 = field_t * field_t * field_t * field_t;
            const double b5_coth = b4 * (2.0 * PhysConstants::k_b * temperature_k /
                                         (g * PhysConstants::mu_b)) +
                                   field_t * field_t * field_t * field_t * field_t * x / 3.0;
            spin_flip = p.a_d * g * g * g * b5_coth;
        } else {
            spin_flip = p.a_d * g * g * g * field_t * field_t * field_t * field_t * field_t /
                        std::tanh(x);
        }
    }
    const double flip_flop = p.b_f * g * g * g * g * sech2;
    return (spin_flip + flip_flop + p.c0) * sech2;
}

double t_m(double field_t, double temperature_k, const SdParams& p) {
    const double y = gamma_sd_r(field_t, temperature_k, p);
    const double g0 = p.gamma0_hz;
    const double eps = y / (kPi * g0 * g0);
    if (eps < 1e-3) {
        // (2 g0/y)(-1 + sqrt(1 + eps)) expanded to keep the branches within
        // 1e-10 of each other at the switch.
        return 1.0 / (kPi * g0) * (1.0 - eps / 4.0 + eps * eps / 8.0);
    }
    return 2.0 * g0 / y * (-1.0 + std::sqrt(1.0 + eps));
}

std::set<std::string> default_frozen(std::span<const CoherencePoint> data) {
    // b_F and g_env only appear as b_F g^4 at a single temperature; keep
    // g_env pinned unless the data actually span temperatures.
    std::set<std::string> frozen;
    if (data.empty()) return frozen;
    double tmin = data.front().temperature_k, tmax = tmin;
    for (const auto& pt : data) {
        tmin = std::min(tmin, pt.temperature_k);
        tmax = std::max(tmax, pt.temperature_k);
    }
    if (tmax - tmin < 0.01 * tmax) frozen.insert("g_env");
    return frozen;
}

SdFit fit_sd(std::span<const CoherencePoint> data, const SdParams& init,
             const std::set<std::string>& frozen) {
    init.validate();
    for (const auto& name : frozen)
        if (std::find(param_names().begin(), param_names().end(), name) == param_names().end())
            throw ValidationError("fit_sd: unknown frozen parameter '" + name + "'");
    if (data.size() < 4) throw ValidationError("fit_sd: need at least 4 points");
    std::vector<double> fields;
    for (const auto& pt : data) {
        pt.validate();
        bool seen = false;
        for (double f : fields)
            if (std::fabs(f - pt.field_t) <= 1e-12 * std::max(1.0, std::fabs(f))) seen = true;
        if (!seen) fields.push_back(pt.field_t);
    }
    if (fields.size() < 3) throw ValidationError("fit_sd: need at least 3 distinct fields");

    std::vector<std::size_t> free_idx;
    for (std::size_t i = 0; i < param_names().size(); ++i)
        if (!frozen.count(param_names()[i])) free_idx.push_back(i);
    if (free_idx.size() >= data.size())
        throw ValidationError("fit_sd: underdetermined (" + std::to_string(free_idx.size()) +
                              " free parameters, " + std::to_string(data.size()) + " points)");

    // A free a_d may start at the table value 0, which the log scale cannot
    // represent. Seed it so its term perturbs the strongest-field point by
    // ~10% of the flip-flop term there.
    SdParams seeded = init;
    if (!frozen.count("a_d") && !(init.a_d > 0.0)) {
        const CoherencePoint* strongest = &data[0];
        for (const auto& pt : data)
            if (pt.field_t > strongest->field_t) strongest = &pt;
        const double g = init.g_env;
        const double x = g * PhysConstants::mu_b * strongest->field_t /
                         (2.0 * PhysConstants::k_b * strongest->temperature_k);
        const double b5 = std::pow(strongest->field_t, 5.0);
        if (!(init.b_f > 0.0) || !(b5 > 0.0) || !(x > 0.0))
            throw ValidationError(
                "fit_sd: free parameter 'a_d' needs a positive initial value (log-scale fit)");
        seeded.a_d = 0.1 * init.b_f * g * std::tanh(x) / (std::cosh(x) * std::cosh(x) * b5);
    }

    std::vector<double> u0(free_idx.size());
    std::vector<std::string> u_names(free_idx.size());
    for (std::size_t j = 0; j < free_idx.size(); ++j) {
        const std::size_t i = free_idx[j];
        const double v = get_param(seeded, i);
        if (log_scaled(i)) {
            if (!(v > 0.0))
                throw ValidationError("fit_sd: free parameter '" + param_names()[i] +
                                      "' needs a positive initial value (log-scale fit)");
            u0[j] = std::log(v);
        } else {
            u0[j] = v;
        }
        u_names[j] = param_names()[i];
    }

    auto expand = [&](std::span<const double> u) {
        SdParams p = init;
        for (std::size_t j = 0; j < free_idx.size(); ++j) {
            const std::size_t i = free_idx[j];
            set_param(p, i, log_scaled(i) ? std::exp(u[j]) : std::max(0.0, u[j]));
        }
        return p;
    };

    // Abscissa is the point index; weights default to the t2 value itself
    // (relative residuals) when no sigma is given.
    Dataset ds;
    ds.x.resize(data.size());
    ds.y.resize(data.size());
    ds.sigma_y.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        ds.x[i] = static_cast<double>(i);
        ds.y[i] = data[i].t2_s;
        ds.sigma_y[i] = data[i].t2_sigma_s > 0.0 ? data[i].t2_sigma_s : data[i].t2_s;
    }

    auto model = [&data, &expand](double x, std::span<const double> u) {
        const auto& pt = data[static_cast<std::size_t>(x + 0.5)];
        return t_m(pt.field_t, pt.temperature_k, expand(u));
    };

    FitOptions options;
    options.names = u_names;
    auto inner = least_squares(model, JacobianFn{}, ds, u0, options);
    if (!inner.converged)
        throw FitError("fit_sd: no convergence after " + std::to_string(inner.iterations) +
                           " iterations",
                       inner.values);

    SdFit out;
    out.params = expand(inner.values);
    out.fit.names = param_names();
    out.fit.values.resize(5);
    out.fit.sigmas.assign(5, 0.0);
    for (std::size_t i = 0; i < 5; ++i) out.fit.values[i] = get_param(out.params, i);
    for (std::size_t j = 0; j < free_idx.size(); ++j) {
        const std::size_t i = free_idx[j];
        // delta method for the log-scaled parameters: sigma_p = p sigma_u
        out.fit.sigmas[i] =
            log_scaled(i) ? get_param(out.params, i) * inner.sigmas[j] : inner.sigmas[j];
    }
    out.fit.residual_norm = inner.residual_norm;
    out.fit.converged = inner.converged;
    out.fit.iterations = inner.iterations;
    return out;
}

}  // namespace shbkit
