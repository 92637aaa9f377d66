// Run configuration: flat sectioned `key = value` text with unit-suffixed
// key names. Unknown sections or keys are rejected. All values are SI
// (Hz, s, T) so the 2 pi factors live only inside the formulas.
#pragma once

#include <set>
#include <string>

#include "shbkit/fidsim.hpp"
#include "shbkit/holesim.hpp"
#include "shbkit/levelmodel.hpp"
#include "shbkit/ratedyn.hpp"
#include "shbkit/specdiff.hpp"

namespace shbkit {

struct ProtocolConfig {
    double burn_s = 3.0e-4;
    double wait_s = 1.0e-5;
    double scan_hz = 2.0e8;      // full read-scan span, centered on the burn
    double grid_points = 2001;   // points across the scan
    double pump_s = 5.0e-2;      // simulate-pump default pump duration
    double delay_s = 1.0e-3;
    double read_window_s = 1.2e-3;
    double field_t = 2.0;
    double temperature_k = 1.7;
    double baseline_od = 1.12;
    double depth_od = 0.3;       // central-hole depth at wait = 0
    double antihole_wait_multiple = 1.0;
    ClassLifetimes lifetimes;
};

struct SdConfig {
    SdParams params;
    std::set<std::string> frozen = {"c0", "g_env"};
};

struct RunConfig {
    HyperfineModel hyperfine;
    BroadeningParams broadening;
    double gamma_laser_sigma_hz = 5.0e4;
    RateParams rates;
    SdConfig sd;
    ProtocolConfig protocol;

    void validate() const;

    // Canonical `key = value` text; parsing it back reproduces the config.
    std::string serialize() const;
};

// Parses config text / file. Errors carry the line number and key.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

// FNV-1a 64-bit over the raw bytes, as a 16-digit hex string. Reports hash
// the config file bytes when one was given, else the serialized defaults.
std::string config_hash_hex(const std::string& bytes);

}  // namespace shbkit
