// End-to-end runs of the shbkit binary: exit-status contract, CSV surfaces
// and report generation.
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "shbkit/csv.hpp"
#include "shbkit/holesim.hpp"
#include "shbkit/specdiff.hpp"

using namespace shbkit;
namespace fs = std::filesystem;

namespace {

const std::string kCli = SHBKIT_CLI_PATH;

fs::path work_dir() {
    const auto dir = fs::temp_directory_path() / "shbkit_cli_tests";
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + kCli + " " + args + " 2>" +
                            (work_dir() / "stderr.log").string();
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::map<std::string, std::string> read_report(const fs::path& path) {
    std::map<std::string, std::string> entries;
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find(" = ");
        REQUIRE(eq != std::string::npos);
        entries[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return entries;
}

double report_value(const std::map<std::string, std::string>& entries, const std::string& key) {
    REQUIRE(entries.count(key));
    return std::stod(entries.at(key));
}

}  // namespace

TEST_CASE("simulate-shb at zero field produces a single central dip") {
    const auto out = work_dir() / "shb0.csv";
    REQUIRE(run("simulate-shb --field 0 --out " + out.string()) == 0);
    const auto data = read_spectrum_csv(out.string());
    const auto min_it = std::min_element(data.od.begin(), data.od.end());
    const auto idx = static_cast<std::size_t>(min_it - data.od.begin());
    CHECK(std::fabs(data.detuning_hz[idx]) < 2e5);
    CHECK(*min_it < 0.5);               // a real dip
    CHECK(data.od.front() > 1.0);       // back to baseline at the edges
    CHECK(data.od.back() > 1.0);
}

TEST_CASE("simulate-shb then fit-hole finds the central hole") {
    const auto out = work_dir() / "shb2.csv";
    const auto report_path = work_dir() / "hole_report.txt";
    REQUIRE(run("simulate-shb --field 2 --wait 1e-5 --out " + out.string()) == 0);
    REQUIRE(run("fit-hole " + out.string() + " --out " + report_path.string()) == 0);

    const auto report = read_report(report_path);
    CHECK(report.at("fit.converged") == "true");
    CHECK(std::fabs(report_value(report, "fit.center_hz")) < 2e5);
    // The single-Lorentzian fit over the full nine-feature scan picks up the
    // side structure as baseline, so the width only lands near 746 kHz.
    CHECK(report_value(report, "fit.fwhm_hz") == doctest::Approx(746e3).epsilon(0.05));
    CHECK(report_value(report, "derived.t2_lower_s") < report_value(report, "derived.t2_s"));
    CHECK(report_value(report, "derived.t2_s") < report_value(report, "derived.t2_upper_s"));
    CHECK(report.count("config_hash"));
    // The CSV twin carries the same content.
    CHECK(fs::exists(work_dir() / "hole_report.csv"));
}

TEST_CASE("fit-hole on an isolated 746.10 kHz hole derives the T2 band") {
    const auto input = work_dir() / "hole746.csv";
    {
        std::vector<double> detuning, od;
        for (int i = 0; i < 401; ++i) {
            const double x = -3e6 + 6e6 * i / 400.0;
            const double hw = 746.10e3 / 2.0;
            detuning.push_back(x);
            od.push_back(1.12 - 0.4 * hw * hw / (x * x + hw * hw));
        }
        write_spectrum_csv(input.string(), detuning, od);
    }
    const auto report_path = work_dir() / "hole746_report.txt";
    REQUIRE(run("fit-hole " + input.string() + " --out " + report_path.string()) == 0);
    const auto report = read_report(report_path);
    CHECK(report_value(report, "fit.fwhm_hz") == doctest::Approx(746.10e3).epsilon(1e-6));
    // Frozen oracle values: T2 from the hole width at gamma_laser = 200 kHz
    // and the band at gamma_laser -+ 50 kHz.
    CHECK(report_value(report, "derived.t2_s") == doctest::Approx(1.1657567705e-6).epsilon(1e-6));
    CHECK(report_value(report, "derived.t2_lower_s") ==
          doctest::Approx(1.0679747901e-6).epsilon(1e-6));
    CHECK(report_value(report, "derived.t2_upper_s") ==
          doctest::Approx(1.2832488860e-6).epsilon(1e-6));
    CHECK(report_value(report, "derived.gamma_hom_hz") == doctest::Approx(273.05e3).epsilon(1e-6));
}

TEST_CASE("wait time suppresses the inner clusters") {
    const auto early = work_dir() / "shb_early.csv";
    const auto late = work_dir() / "shb_late.csv";
    REQUIRE(run("simulate-shb --field 2 --wait 1e-5 --out " + early.string()) == 0);
    REQUIRE(run("simulate-shb --field 2 --wait 2.5e-3 --out " + late.string()) == 0);

    const auto a = read_spectrum_csv(early.string());
    const auto b = read_spectrum_csv(late.string());
    auto depth_at = [](const SpectrumData& data, double nu) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < data.detuning_hz.size(); ++i)
            if (std::fabs(data.detuning_hz[i] - nu) < std::fabs(data.detuning_hz[best] - nu))
                best = i;
        return 1.12 - data.od[best];
    };
    const double inner = 51.2e6 - 3.05e6;
    const double ratio = depth_at(b, inner) / depth_at(a, inner);
    const double expected = std::exp(-(2.5e-3 - 1e-5) / 0.85e-3);
    CHECK(ratio == doctest::Approx(expected).epsilon(0.10));

    // Anti-holes only appear once the wait exceeds the X1 lifetime: extra
    // absorption above the baseline at late wait, none at early wait.
    CHECK(*std::max_element(a.od.begin(), a.od.end()) <= 1.12 + 1e-9);
    CHECK(*std::max_element(b.od.begin(), b.od.end()) > 1.12 + 1e-3);
}

TEST_CASE("every predicted 2 T feature is fit-detectable from the emitted CSV") {
    const auto out = work_dir() / "shb2_features.csv";
    REQUIRE(run("simulate-shb --field 2 --wait 1e-5 --out " + out.string()) == 0);
    const auto data = read_spectrum_csv(out.string());
    const double expected[] = {0.0,      48.15e6,  54.25e6,  -48.15e6, -54.25e6,
                               80.85e6,  85.55e6,  -80.85e6, -85.55e6};
    for (double center : expected) {
        std::vector<double> x, y;
        for (std::size_t i = 0; i < data.detuning_hz.size(); ++i)
            if (std::fabs(data.detuning_hz[i] - center) < 2.5e6) {
                x.push_back(data.detuning_hz[i]);
                y.push_back(data.od[i]);
            }
        const auto fit = fit_hole(x, y);
        CHECK(std::fabs(fit.value("center_hz") - center) < 0.5e6);
        CHECK(fit.value("depth_od") > 0.01);
    }
}

TEST_CASE("field sweep emits one od column per field") {
    const auto out = work_dir() / "sweep.csv";
    REQUIRE(run("simulate-shb --field-sweep 0:2:1 --out " + out.string()) == 0);
    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    CHECK(header == "detuning_hz,od_B0,od_B1,od_B2");
}

TEST_CASE("simulate-pump with the pump off keeps the ground state") {
    const auto cfg = work_dir() / "nopump.cfg";
    std::ofstream(cfg) << "[rates]\nre0_per_s = 0\n";
    const auto out = work_dir() / "pump0.csv";
    REQUIRE(run("simulate-pump --config " + cfg.string() + " --pump 1e-3 --delay 1e-3 --out " +
                out.string()) == 0);
    std::ifstream in(out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "time_s,n_g,n_e,n_b");
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        CHECK(line.substr(c1 + 1, 2) == "1,");
    }
}

TEST_CASE("delay sweep plus fit-lifetime recovers the bottleneck lifetime") {
    const auto out = work_dir() / "areas.csv";
    const auto report_path = work_dir() / "tb_report.txt";
    REQUIRE(run("simulate-pump --pump 0.1 --delay-sweep 5e-3:3e-2:2.5e-3 --out " +
                out.string()) == 0);
    REQUIRE(run("fit-lifetime " + out.string() + " --out " + report_path.string()) == 0);
    const auto report = read_report(report_path);
    // Default config: Tb = 6.3 ms.
    CHECK(report_value(report, "fit.lifetime_s") == doctest::Approx(6.3e-3).epsilon(0.01));
}

TEST_CASE("simulate-fid then fit-fid round trip through the filesystem") {
    const auto out = work_dir() / "fid.csv";
    const auto report_path = work_dir() / "fid_report.txt";
    REQUIRE(run("simulate-fid --points 120 --out " + out.string()) == 0);
    REQUIRE(run("fit-fid " + out.string() + " --out " + report_path.string()) == 0);
    const auto report = read_report(report_path);
    CHECK(report_value(report, "fit.tau_fid_s") == doctest::Approx(2.1334442774e-7).epsilon(0.01));
    CHECK(report_value(report, "derived.t2_s") == doctest::Approx(1.1657567705e-6).epsilon(0.02));
}

TEST_CASE("fit-fid on the measured 211.3 ns trace gives T2 = 1.151 us") {
    const auto input = work_dir() / "fid_meas.csv";
    {
        std::vector<double> t, v;
        for (int i = 0; i < 60; ++i) {
            t.push_back(i * 1e-8);
            v.push_back(std::exp(-i * 1e-8 / 211.3e-9));
        }
        write_time_trace_csv(input.string(), t, v);
    }
    const auto report_path = work_dir() / "fid_meas_report.txt";
    REQUIRE(run("fit-fid " + input.string() + " --out " + report_path.string()) == 0);
    const auto report = read_report(report_path);
    CHECK(report_value(report, "derived.t2_s") == doctest::Approx(1.1507577175e-6).epsilon(1e-4));
}

TEST_CASE("fit-sd frees a_d by default and drives it to zero") {
    const auto input = work_dir() / "coherence.csv";
    {
        SdParams table;
        std::vector<CoherencePoint> points;
        for (double b : {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0}) {
            const double t2 = t_m(b, 1.7, table);
            points.push_back({b, 1.7, t2, 0.01 * t2, CoherenceMethod::HoleBurning});
        }
        write_coherence_csv(input.string(), points);
    }
    const auto report_path = work_dir() / "sd_report.txt";
    REQUIRE(run("fit-sd " + input.string() + " --out " + report_path.string()) == 0);
    const auto report = read_report(report_path);
    CHECK(report.at("frozen") == "c0,g_env");
    CHECK(report.at("fit.converged") == "true");
    CHECK(report_value(report, "fit.b_f") == doctest::Approx(4.2e10).epsilon(0.01));
    CHECK(report_value(report, "fit.gamma0_hz") == doctest::Approx(259.8e3).epsilon(0.01));
    CHECK(report_value(report, "fit.a_d") < 1e5);
}

TEST_CASE("config file via environment variable override") {
    const auto cfg = work_dir() / "env.cfg";
    std::ofstream(cfg) << "[protocol]\nscan_hz = 4.0e8\ngrid_points = 101\n";
    const auto out = work_dir() / "env_shb.csv";
    REQUIRE(run("simulate-shb --field 0 --out " + out.string(),
                "SHBKIT_CONFIG=" + cfg.string()) == 0);
    const auto data = read_spectrum_csv(out.string());
    CHECK(data.detuning_hz.size() == 101);
    CHECK(data.detuning_hz.front() == doctest::Approx(-2.0e8));
}

TEST_CASE("exit status contract") {
    SUBCASE("missing input file is a validation error") {
        CHECK(run("fit-hole /does/not/exist.csv --out " + (work_dir() / "x.txt").string()) == 1);
    }
    SUBCASE("unknown config key is a validation error") {
        const auto cfg = work_dir() / "bad.cfg";
        std::ofstream(cfg) << "[rates]\nwarp_factor = 9\n";
        CHECK(run("simulate-pump --config " + cfg.string() + " --out " +
                  (work_dir() / "x.csv").string()) == 1);
    }
    SUBCASE("malformed sweep is a validation error") {
        CHECK(run("simulate-shb --field-sweep 0:2 --out " + (work_dir() / "x.csv").string()) ==
              1);
    }
    SUBCASE("narrow grid truncating features is a validation error") {
        const auto cfg = work_dir() / "narrow.cfg";
        std::ofstream(cfg) << "[protocol]\nscan_hz = 1.0e8\n";
        CHECK(run("simulate-shb --config " + cfg.string() + " --field 2 --out " +
                  (work_dir() / "x.csv").string()) == 1);
    }
    SUBCASE("integrator breakdown is a numerical error") {
        const auto cfg = work_dir() / "hot.cfg";
        std::ofstream(cfg) << "[rates]\nre0_per_s = 1e30\n";
        CHECK(run("simulate-pump --config " + cfg.string() + " --pump 5e-2 --out " +
                  (work_dir() / "x.csv").string()) == 2);
    }
    SUBCASE("unknown flag is a validation error") {
        CHECK(run("simulate-shb --warp 9 --out " + (work_dir() / "x.csv").string()) == 1);
    }
    SUBCASE("help exits zero") {
        CHECK(run("--help >/dev/null") == 0);
    }
}
