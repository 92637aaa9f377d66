#include "shbkit/config.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "shbkit/csv.hpp"

namespace shbkit {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& value, const std::string& key, std::size_t line) {
    double v = 0.0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw ValidationError("config line " + std::to_string(line) + ": key '" + key +
                              "': '" + value + "' is not a number");
    return v;
}

const std::set<std::string>& sd_param_names() {
    static const std::set<std::string> names{"a_d", "b_f", "c0", "gamma0", "g_env"};
    return names;
}

struct KeySetter {
    const char* section;
    const char* key;
    void (*apply)(RunConfig&, const std::string&, std::size_t);
};

void set_selection_rule(RunConfig& c, const std::string& value, std::size_t line) {
    if (value == "spin_conserving")
        c.hyperfine.selection_rule = SelectionRule::SpinConserving;
    else if (value == "spin_free")
        c.hyperfine.selection_rule = SelectionRule::SpinFree;
    else
        throw ValidationError("config line " + std::to_string(line) +
                              ": selection_rule must be spin_conserving or spin_free");
}

void set_frozen(RunConfig& c, const std::string& value, std::size_t line) {
    c.sd.frozen.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        if (!sd_param_names().count(item))
            throw ValidationError("config line " + std::to_string(line) +
                                  ": unknown frozen parameter '" + item + "'");
        c.sd.frozen.insert(item);
    }
}

#define NUM_KEY(sec, name, target)                                             \
    KeySetter {                                                                 \
        sec, name, [](RunConfig& c, const std::string& v, std::size_t line) {   \
            c.target = parse_double(v, name, line);                             \
        }                                                                       \
    }

const KeySetter kSetters[] = {
    NUM_KEY("hyperfine", "rate_y1_hz_per_t", hyperfine.rate_y1_hz_per_t),
    NUM_KEY("hyperfine", "rate_x1_hz_per_t", hyperfine.rate_x1_hz_per_t),
    NUM_KEY("hyperfine", "shf_diff_y1_hz_per_t", hyperfine.shf_diff_y1_hz_per_t),
    NUM_KEY("hyperfine", "shf_diff_x1_hz_per_t", hyperfine.shf_diff_x1_hz_per_t),
    {"hyperfine", "selection_rule", set_selection_rule},
    NUM_KEY("broadening", "gamma_hom_hz", broadening.gamma_hom_hz),
    NUM_KEY("broadening", "gamma_laser_hz", broadening.gamma_laser_hz),
    NUM_KEY("broadening", "gamma_laser_sigma_hz", gamma_laser_sigma_hz),
    NUM_KEY("broadening", "rabi_rad_per_s", broadening.rabi_rad_per_s),
    NUM_KEY("broadening", "t1_s", broadening.t1_s),
    NUM_KEY("broadening", "t2_s", broadening.t2_s),
    NUM_KEY("rates", "re0_per_s", rates.re0_per_s),
    NUM_KEY("rates", "t1_s", rates.t1_s),
    NUM_KEY("rates", "tb_s", rates.tb_s),
    NUM_KEY("rates", "beta", rates.beta),
    NUM_KEY("rates", "od", rates.od),
    NUM_KEY("rates", "pump_bw_hz", rates.pump_bw_hz),
    NUM_KEY("rates", "gamma_inh_hz", rates.gamma_inh_hz),
    NUM_KEY("sd", "a_d_hz2_per_t5", sd.params.a_d),
    NUM_KEY("sd", "b_f_hz2", sd.params.b_f),
    NUM_KEY("sd", "c0_hz2", sd.params.c0),
    NUM_KEY("sd", "gamma0_hz", sd.params.gamma0_hz),
    NUM_KEY("sd", "g_env", sd.params.g_env),
    {"sd", "frozen", set_frozen},
    NUM_KEY("protocol", "burn_s", protocol.burn_s),
    NUM_KEY("protocol", "wait_s", protocol.wait_s),
    NUM_KEY("protocol", "scan_hz", protocol.scan_hz),
    NUM_KEY("protocol", "grid_points", protocol.grid_points),
    NUM_KEY("protocol", "pump_s", protocol.pump_s),
    NUM_KEY("protocol", "delay_s", protocol.delay_s),
    NUM_KEY("protocol", "read_window_s", protocol.read_window_s),
    NUM_KEY("protocol", "field_t", protocol.field_t),
    NUM_KEY("protocol", "temperature_k", protocol.temperature_k),
    NUM_KEY("protocol", "baseline_od", protocol.baseline_od),
    NUM_KEY("protocol", "depth_od", protocol.depth_od),
    NUM_KEY("protocol", "antihole_wait_multiple", protocol.antihole_wait_multiple),
    NUM_KEY("protocol", "central_lifetime_s", protocol.lifetimes.central_s),
    NUM_KEY("protocol", "inner_lifetime_s", protocol.lifetimes.inner_s),
    NUM_KEY("protocol", "outer_lifetime_s", protocol.lifetimes.outer_s),
    NUM_KEY("protocol", "antihole_lifetime_s", protocol.lifetimes.antihole_s),
};

#undef NUM_KEY

}  // namespace

void RunConfig::validate() const {
    hyperfine.validate();
    broadening.validate();
    rates.validate();
    sd.params.validate();
    if (gamma_laser_sigma_hz < 0.0)
        throw ValidationError("config: gamma_laser_sigma must be non-negative");
    if (!(protocol.scan_hz > 0.0)) throw ValidationError("config: scan span must be positive");
    if (!(protocol.grid_points >= 8.0))
        throw ValidationError("config: grid_points must be at least 8");
    if (protocol.burn_s < 0.0 || protocol.wait_s < 0.0 || protocol.pump_s < 0.0 ||
        protocol.delay_s < 0.0 || protocol.read_window_s < 0.0)
        throw ValidationError("config: protocol durations must be non-negative");
    if (!(protocol.field_t >= 0.0)) throw ValidationError("config: field must be non-negative");
    if (!(protocol.temperature_k > 0.0))
        throw ValidationError("config: temperature must be positive");
    if (protocol.baseline_od < 0.0 || protocol.depth_od < 0.0)
        throw ValidationError("config: optical depths must be non-negative");
    if (protocol.antihole_wait_multiple < 0.0)
        throw ValidationError("config: antihole_wait_multiple must be non-negative");
    for (double tau : {protocol.lifetimes.central_s, protocol.lifetimes.inner_s,
                       protocol.lifetimes.outer_s, protocol.lifetimes.antihole_s})
        if (!(tau > 0.0)) throw ValidationError("config: class lifetimes must be positive");
}

std::string RunConfig::serialize() const {
    std::ostringstream out;
    std::string section;
    auto emit = [&](const char* sec, const char* key, const std::string& value) {
        if (section != sec) {
            if (!section.empty()) out << "\n";
            out << "[" << sec << "]\n";
            section = sec;
        }
        out << key << " = " << value << "\n";
    };
    auto num = [&](const char* sec, const char* key, double v) { emit(sec, key, format_double(v)); };

    num("hyperfine", "rate_y1_hz_per_t", hyperfine.rate_y1_hz_per_t);
    num("hyperfine", "rate_x1_hz_per_t", hyperfine.rate_x1_hz_per_t);
    num("hyperfine", "shf_diff_y1_hz_per_t", hyperfine.shf_diff_y1_hz_per_t);
    num("hyperfine", "shf_diff_x1_hz_per_t", hyperfine.shf_diff_x1_hz_per_t);
    emit("hyperfine", "selection_rule",
         hyperfine.selection_rule == SelectionRule::SpinFree ? "spin_free" : "spin_conserving");
    num("broadening", "gamma_hom_hz", broadening.gamma_hom_hz);
    num("broadening", "gamma_laser_hz", broadening.gamma_laser_hz);
    num("broadening", "gamma_laser_sigma_hz", gamma_laser_sigma_hz);
    num("broadening", "rabi_rad_per_s", broadening.rabi_rad_per_s);
    num("broadening", "t1_s", broadening.t1_s);
    num("broadening", "t2_s", broadening.t2_s);
    num("rates", "re0_per_s", rates.re0_per_s);
    num("rates", "t1_s", rates.t1_s);
    num("rates", "tb_s", rates.tb_s);
    num("rates", "beta", rates.beta);
    num("rates", "od", rates.od);
    num("rates", "pump_bw_hz", rates.pump_bw_hz);
    num("rates", "gamma_inh_hz", rates.gamma_inh_hz);
    num("sd", "a_d_hz2_per_t5", sd.params.a_d);
    num("sd", "b_f_hz2", sd.params.b_f);
    num("sd", "c0_hz2", sd.params.c0);
    num("sd", "gamma0_hz", sd.params.gamma0_hz);
    num("sd", "g_env", sd.params.g_env);
    {
        std::string frozen;
        for (const auto& name : sd.frozen) frozen += (frozen.empty() ? "" : ",") + name;
        emit("sd", "frozen", frozen);
    }
    num("protocol", "burn_s", protocol.burn_s);
    num("protocol", "wait_s", protocol.wait_s);
    num("protocol", "scan_hz", protocol.scan_hz);
    num("protocol", "grid_points", protocol.grid_points);
    num("protocol", "pump_s", protocol.pump_s);
    num("protocol", "delay_s", protocol.delay_s);
    num("protocol", "read_window_s", protocol.read_window_s);
    num("protocol", "field_t", protocol.field_t);
    num("protocol", "temperature_k", protocol.temperature_k);
    num("protocol", "baseline_od", protocol.baseline_od);
    num("protocol", "depth_od", protocol.depth_od);
    num("protocol", "antihole_wait_multiple", protocol.antihole_wait_multiple);
    num("protocol", "central_lifetime_s", protocol.lifetimes.central_s);
    num("protocol", "inner_lifetime_s", protocol.lifetimes.inner_s);
    num("protocol", "outer_lifetime_s", protocol.lifetimes.outer_s);
    num("protocol", "antihole_lifetime_s", protocol.lifetimes.antihole_s);
    return out.str();
}

RunConfig parse_config(const std::string& text) {
    RunConfig config;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ValidationError("config line " + std::to_string(line_no) +
                                      ": malformed section header '" + s + "'");
            section = trim(s.substr(1, s.size() - 2));
            bool known = false;
            for (const auto& setter : kSetters)
                if (section == setter.section) known = true;
            if (!known)
                throw ValidationError("config line " + std::to_string(line_no) +
                                      ": unknown section '" + section + "'");
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no) +
                                  ": expected 'key = value', got '" + s + "'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (section.empty())
            throw ValidationError("config line " + std::to_string(line_no) +
                                  ": key '" + key + "' outside any section");
        bool handled = false;
        for (const auto& setter : kSetters) {
            if (section == setter.section && key == setter.key) {
                setter.apply(config, value, line_no);
                handled = true;
                break;
            }
        }
        if (!handled)
            throw ValidationError("config line " + std::to_string(line_no) +
                                  ": unknown key '" + key + "' in section [" + section + "]");
    }
    config.validate();
    return config;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_hash_hex(const std::string& bytes) {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace shbkit
