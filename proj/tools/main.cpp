// shbkit command line: forward simulations (simulate-shb, simulate-fid,
// simulate-pump) and fits (fit-hole, fit-fid, fit-lifetime, fit-sd).
//
// Exit status: 0 success, 1 validation error (flags, config, CSV schema),
// 2 numerical failure (non-convergence, integrator breakdown).

#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shbkit/config.hpp"
#include "shbkit/csv.hpp"
#include "shbkit/report.hpp"

namespace {

using namespace shbkit;

struct LoadedConfig {
    RunConfig config;
    std::string path;  // empty = builtin defaults
    std::string hash;
};

LoadedConfig load(const std::string& config_path) {
    LoadedConfig loaded;
    if (config_path.empty()) {
        loaded.hash = config_hash_hex(loaded.config.serialize());
        return loaded;
    }
    loaded.config = load_config_file(config_path);
    loaded.path = config_path;
    std::ifstream in(config_path, std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    loaded.hash = config_hash_hex(bytes.str());
    return loaded;
}

std::vector<double> parse_sweep(const std::string& text) {
    double start = 0, stop = 0, step = 0;
    std::string rest = text;
    for (double* slot : {&start, &stop, &step}) {
        const std::size_t colon = rest.find(':');
        const std::string tok = colon == std::string::npos ? rest : rest.substr(0, colon);
        try {
            *slot = std::stod(tok);
        } catch (const std::exception&) {
            throw ValidationError("bad sweep '" + text + "': expected start:stop:step");
        }
        if (slot != &step && colon == std::string::npos)
            throw ValidationError("bad sweep '" + text + "': expected start:stop:step");
        rest = colon == std::string::npos ? "" : rest.substr(colon + 1);
    }
    if (!(step > 0.0)) throw ValidationError("bad sweep '" + text + "': step must be positive");
    if (stop < start) throw ValidationError("bad sweep '" + text + "': stop before start");
    std::vector<double> values;
    for (double v = start; v <= stop + 0.5 * step; v += step) values.push_back(v);
    return values;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

void add_provenance(Report& report, const std::string& command, const std::string& input,
                    const LoadedConfig& cfg) {
    report.add_comment("shbkit " + command + " report");
    report.add("command", command);
    if (!input.empty()) report.add("input", input);
    report.add("config", cfg.path.empty() ? "builtin-defaults" : cfg.path);
    report.add("config_hash", cfg.hash);
}

void add_fit_block(Report& report, const FitResult& fit) {
    for (std::size_t i = 0; i < fit.names.size(); ++i) {
        report.add("fit." + fit.names[i], fit.values[i]);
        report.add("fit." + fit.names[i] + "_sigma", fit.sigmas[i]);
    }
    report.add("fit.residual_norm", fit.residual_norm);
    report.add("fit.converged", fit.converged);
    report.add("fit.iterations", static_cast<double>(fit.iterations));
}

// T2 band from the +-sigma laser-linewidth window; the upper edge can be
// unbounded when the feature is laser-limited at gamma_laser + sigma.
void add_t2_band(Report& report, double t2_center, double t2_lower, bool upper_ok,
                 double t2_upper) {
    report.add("derived.t2_s", t2_center);
    report.add("derived.t2_lower_s", t2_lower);
    if (upper_ok)
        report.add("derived.t2_upper_s", t2_upper);
    else
        report.add("derived.t2_upper_s", std::string("inf"));
}

HoleSpectrum shb_spectrum(const RunConfig& cfg, double field, double wait,
                          std::span<const double> grid) {
    const bool anti = antiholes_visible(wait, cfg.protocol.lifetimes.inner_s,
                                        cfg.protocol.antihole_wait_multiple);
    const auto pattern = predict_hole_pattern(cfg.hyperfine, field, anti);
    return synthesize_spectrum(pattern, cfg.broadening, wait, cfg.protocol.lifetimes, grid,
                               cfg.protocol.baseline_od, cfg.protocol.depth_od);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral-hole-burning and optical-coherence toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::string input_path;

    // --- simulate-shb ------------------------------------------------------
    auto* sim_shb = app.add_subcommand("simulate-shb", "Synthesize a hole-burning spectrum");
    double field = 0.0, wait = 0.0;
    std::string field_sweep;
    sim_shb->add_option("--config", config_path, "config file")->envname("SHBKIT_CONFIG");
    sim_shb->add_option("--field", field, "magnetic field in T");
    sim_shb->add_option("--field-sweep", field_sweep, "field sweep start:stop:step in T");
    sim_shb->add_option("--wait", wait, "wait time in s");
    sim_shb->add_option("--out", out_path, "output spectrum CSV")->required();
    sim_shb->callback([&] {
        auto cfg = load(config_path);
        const double wait_s = sim_shb->count("--wait") ? wait : cfg.config.protocol.wait_s;
        const auto grid =
            linspace(-cfg.config.protocol.scan_hz / 2.0, cfg.config.protocol.scan_hz / 2.0,
                     static_cast<std::size_t>(cfg.config.protocol.grid_points));
        if (!field_sweep.empty()) {
            std::vector<std::pair<double, std::vector<double>>> columns;
            for (double b : parse_sweep(field_sweep))
                columns.emplace_back(b, shb_spectrum(cfg.config, b, wait_s, grid).od);
            write_spectrum_sweep_csv(out_path, grid, columns);
        } else {
            const double b = sim_shb->count("--field") ? field : cfg.config.protocol.field_t;
            write_spectrum_csv(out_path, grid, shb_spectrum(cfg.config, b, wait_s, grid).od);
        }
    });

    // --- simulate-fid ------------------------------------------------------
    auto* sim_fid = app.add_subcommand("simulate-fid", "Synthesize a free-induction decay");
    double t_max = 0.0, cutoff = 50.0;
    std::size_t points = 400;
    sim_fid->add_option("--config", config_path, "config file")->envname("SHBKIT_CONFIG");
    sim_fid->add_option("--t-max", t_max, "trace length in s (default 5 tau_FID)");
    sim_fid->add_option("--points", points, "number of samples");
    sim_fid->add_option("--cutoff", cutoff, "detuning cutoff in multiples of Gamma_g");
    sim_fid->add_option("--out", out_path, "output time-trace CSV")->required();
    sim_fid->callback([&] {
        auto cfg = load(config_path);
        EnsembleSpec spec{cfg.config.broadening.gamma_hom_hz,
                          cfg.config.broadening.gamma_laser_hz, cutoff};
        const double horizon =
            sim_fid->count("--t-max")
                ? t_max
                : 5.0 * tau_fid(spec.gamma_hom_hz, spec.gamma_laser_hz);
        if (points < 2) throw ValidationError("simulate-fid: need at least 2 points");
        const auto trace = synthesize_fid(spec, linspace(0.0, horizon, points));
        write_time_trace_csv(out_path, trace.times_s, trace.intensity);
    });

    // --- simulate-pump -----------------------------------------------------
    auto* sim_pump = app.add_subcommand("simulate-pump", "Pump-wait-read population dynamics");
    double pump = 0.0, delay = 0.0;
    std::string delay_sweep;
    sim_pump->add_option("--config", config_path, "config file")->envname("SHBKIT_CONFIG");
    sim_pump->add_option("--pump", pump, "pump duration in s");
    sim_pump->add_option("--delay", delay, "delay before the read window in s");
    sim_pump->add_option("--delay-sweep", delay_sweep,
                         "delay sweep start:stop:step in s, emits the hole-area series");
    sim_pump->add_option("--out", out_path, "output CSV")->required();
    sim_pump->callback([&] {
        auto cfg = load(config_path);
        PumpSchedule schedule;
        schedule.tau_pump_s = sim_pump->count("--pump") ? pump : cfg.config.protocol.pump_s;
        schedule.tau_delay_s = sim_pump->count("--delay") ? delay : cfg.config.protocol.delay_s;
        schedule.read_window_s = cfg.config.protocol.read_window_s;
        if (!delay_sweep.empty()) {
            const auto delays = parse_sweep(delay_sweep);
            std::vector<double> areas;
            for (double d : delays) {
                schedule.tau_delay_s = d;
                areas.push_back(hole_area(cfg.config.rates, schedule));
            }
            write_time_trace_csv(out_path, delays, areas);
        } else {
            const auto trace = integrate(cfg.config.rates, schedule, PopulationState{});
            write_populations_csv(out_path, trace);
        }
    });

    // --- fit-hole ----------------------------------------------------------
    auto* fit_hole_cmd = app.add_subcommand("fit-hole", "Fit a spectral hole and derive T2");
    fit_hole_cmd->add_option("input", input_path, "spectrum CSV (detuning_hz,od)")->required();
    fit_hole_cmd->add_option("--config", config_path, "config file")->envname("SHBKIT_CONFIG");
    fit_hole_cmd->add_option("--out", out_path, "report path")->required();
    fit_hole_cmd->callback([&] {
        auto cfg = load(config_path);
        const auto data = read_spectrum_csv(input_path);
        const auto fit = fit_hole(data.detuning_hz, data.od);

        Report report;
        add_provenance(report, "fit-hole", input_path, cfg);
        const double gl = cfg.config.broadening.gamma_laser_hz;
        const double gl_sigma = cfg.config.gamma_laser_sigma_hz;
        report.add("gamma_laser_hz", gl);
        report.add("gamma_laser_sigma_hz", gl_sigma);
        add_fit_block(report, fit);

        const double gamma_hole = fit.value("fwhm_hz");
        report.add("derived.gamma_hom_hz", (gamma_hole - gl) / 2.0);
        const double t2 = t2_from_hole(gamma_hole, gl);
        const double t2_lower = t2_from_hole(gamma_hole, gl - gl_sigma);
        bool upper_ok = gamma_hole > gl + gl_sigma;
        add_t2_band(report, t2, t2_lower, upper_ok,
                    upper_ok ? t2_from_hole(gamma_hole, gl + gl_sigma) : 0.0);
        report.write(out_path);
    });

    // --- fit-fid -----------------------------------------------------------
    auto* fit_fid_cmd = app.add_subcommand("fit-fid", "Fit an FID trace and derive T2");
    fit_fid_cmd->add_option("input", input_path, "time-trace CSV (time_s,value)")->required();
    fit_fid_cmd->add_option("--config", config_path, "config file")->envname("SHBKIT_CONFIG");
    fit_fid_cmd->add_option("--out", out_path, "report path")->required();
    fit_fid_cmd->callback([&] {
        auto cfg = load(config_path);
        const auto raw = read_time_trace_csv(input_path);
        FidTrace trace{raw.time_s, raw.value};
        const auto fit = fit_fid(trace);

        Report report;
        add_provenance(report, "fit-fid", input_path, cfg);
        const double gl = cfg.config.broadening.gamma_laser_hz;
        const double gl_sigma = cfg.config.gamma_laser_sigma_hz;
        report.add("gamma_laser_hz", gl);
        report.add("gamma_laser_sigma_hz", gl_sigma);
        add_fit_block(report, fit);

        const double tau = fit.value("tau_fid_s");
        const double t2 = t2_from_fid(tau, gl);
        const double t2_lower = t2_from_fid(tau, gl - gl_sigma);
        bool upper_ok = 1.0 / tau > 2.0 * std::numbers::pi * (gl + gl_sigma);
        add_t2_band(report, t2, t2_lower, upper_ok,
                    upper_ok ? t2_from_fid(tau, gl + gl_sigma) : 0.0);
        report.write(out_path);
    });

    // --- fit-lifetime ------------------------------------------------------
    auto* fit_life_cmd = app.add_subcommand("fit-lifetime", "Fit an exponential decay");
    bool biexp = false;
    fit_life_cmd->add_option("input", input_path, "time-trace CSV (time_s,value)")->required();
    fit_life_cmd->add_option("--config", config_path, "config file")->envname("SHBKIT_CONFIG");
    fit_life_cmd->add_flag("--bi", biexp, "bi-exponential model");
    fit_life_cmd->add_option("--out", out_path, "report path")->required();
    fit_life_cmd->callback([&] {
        auto cfg = load(config_path);
        const auto raw = read_time_trace_csv(input_path);
        Dataset data;
        data.x = raw.time_s;
        data.y = raw.value;
        const auto fit = fit_lifetime(data, biexp);

        Report report;
        add_provenance(report, "fit-lifetime", input_path, cfg);
        add_fit_block(report, fit);
        report.write(out_path);
    });

    // --- fit-sd ------------------------------------------------------------
    auto* fit_sd_cmd = app.add_subcommand("fit-sd", "Fit the spectral-diffusion model");
    std::string frozen_override;
    fit_sd_cmd->add_option("input", input_path, "coherence CSV")->required();
    fit_sd_cmd->add_option("--config", config_path, "config file")->envname("SHBKIT_CONFIG");
    fit_sd_cmd->add_option("--frozen", frozen_override,
                           "comma list of pinned parameters (overrides config; 'none' frees all)");
    fit_sd_cmd->add_option("--out", out_path, "report path")->required();
    fit_sd_cmd->callback([&] {
        auto cfg = load(config_path);
        const auto data = read_coherence_csv(input_path);
        std::set<std::string> frozen = cfg.config.sd.frozen;
        if (fit_sd_cmd->count("--frozen")) {
            frozen.clear();
            if (frozen_override != "none") {
                std::stringstream ss(frozen_override);
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!item.empty()) frozen.insert(item);
            }
        }
        const auto result = fit_sd(data, cfg.config.sd.params, frozen);

        Report report;
        add_provenance(report, "fit-sd", input_path, cfg);
        std::string frozen_text;
        for (const auto& name : frozen) frozen_text += (frozen_text.empty() ? "" : ",") + name;
        report.add("frozen", frozen_text.empty() ? "none" : frozen_text);
        report.add("points", static_cast<double>(data.size()));
        add_fit_block(report, result.fit);
        report.write(out_path);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
