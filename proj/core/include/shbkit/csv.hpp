// CSV schemas shared by the CLI and the library:
//   spectra        detuning_hz,od          (sweeps: od_B<value> per field)
//   time traces    time_s,value
//   populations    time_s,n_g,n_e,n_b
//   coherence      field_t,temperature_k,t2_s,t2_sigma_s,method
// Lines starting with '#' are comments. Values are written with 17
// significant digits so an emit/ingest round trip is bit-exact.
#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shbkit/ratedyn.hpp"
#include "shbkit/specdiff.hpp"

namespace shbkit {

struct SpectrumData {
    std::vector<double> detuning_hz;
    std::vector<double> od;
};

struct TimeTrace {
    std::vector<double> time_s;
    std::vector<double> value;
};

std::string format_double(double v);  // %.17g

void write_spectrum_csv(const std::string& path, std::span<const double> detuning_hz,
                        std::span<const double> od);

// One od column per field, header od_B<value>.
void write_spectrum_sweep_csv(const std::string& path, std::span<const double> detuning_hz,
                              const std::vector<std::pair<double, std::vector<double>>>& by_field);

void write_time_trace_csv(const std::string& path, std::span<const double> time_s,
                          std::span<const double> value);

void write_populations_csv(const std::string& path, std::span<const TracePoint> trace);

void write_coherence_csv(const std::string& path, std::span<const CoherencePoint> points);

// Readers validate the header and every cell; schema violations raise
// ValidationError naming the offending column and row.
SpectrumData read_spectrum_csv(const std::string& path);
TimeTrace read_time_trace_csv(const std::string& path);
std::vector<CoherencePoint> read_coherence_csv(const std::string& path);

}  // namespace shbkit
