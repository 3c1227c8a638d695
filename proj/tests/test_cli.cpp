#include "doctest.h"

#include "polariton/commands.hpp"
#include "polariton/constants.hpp"
#include "polariton/dispersion.hpp"
#include "polariton/overlap.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace polariton;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "polariton");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "polariton_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string bundled(const std::string& name) { return std::string(POLARITON_SOURCE_DIR) + "/configs/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

const std::string kZeroCoupling = R"([photons]
frequencies_THz = 0.8, 1.6
[coupling]
omega_R_11_over_omega1 = 0
omega_R_2_tilde_over_omega2 = 0
eta = 0
[sweep]
nu_c_start_THz = 0.05
nu_c_stop_THz = 2.2
nu_c_step_THz = 0.05
[spectrum]
linewidths_THz = 0.02
nu_start_THz = 0
nu_stop_THz = 2.5
nu_step_THz = 0.005
weight = equal
)";

// Reads spectrum.csv into rows keyed by ν_c.
std::map<double, std::vector<std::pair<double, double>>> read_spectrum(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::map<double, std::vector<std::pair<double, double>>> rows;
    while (std::getline(in, line)) {
        std::istringstream s(line);
        double a, b, t;
        char c1, c2;
        s >> a >> c1 >> b >> c2 >> t;
        rows[a].emplace_back(b, t);
    }
    return rows;
}

} // namespace

TEST_CASE("sweep reports four coupled branches for the unstructured config") {
    const auto dir = scratch("unstructured");
    const auto r = cli({"sweep", "--config", bundled("unstructured.cfg"), "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = json::parse(slurp(dir / "summary.json"));
    CHECK(j["features"]["n_coupled_branches"] == 4);
    CHECK(fs::exists(dir / "branches.csv"));
    CHECK_FALSE(fs::exists(dir / "branches.csv.tmp"));
}

TEST_CASE("sweep reports the S-shape for the structured config") {
    const auto dir = scratch("structured");
    REQUIRE(cli({"sweep", "--config", bundled("structured.cfg"), "--out", dir.string()}).code == 0);
    const auto j = json::parse(slurp(dir / "summary.json"));
    CHECK(j["features"]["n_coupled_branches"] == 3);
    CHECK(j["features"]["n_residual_lines"] == 1);
    CHECK(j["features"]["inflection_nu_c_THz"].is_number());
}

TEST_CASE("zero step is a schema error") {
    const auto dir = scratch("zero_step");
    std::string text = slurp(bundled("unstructured.cfg"));
    text.replace(text.find("nu_c_step_THz = 0.01"), 20, "nu_c_step_THz = 0");
    const auto cfg = write(dir / "bad.cfg", text);
    const auto r = cli({"sweep", "--config", cfg.string(), "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.rfind("ERROR 2: ", 0) == 0);
    CHECK(r.err.find("bad.cfg:") != std::string::npos);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({}).code == 2);
    const auto r = cli({"sweep"});
    CHECK(r.code == 2);
    CHECK(r.err.rfind("ERROR 2: ", 0) == 0);
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("outputs are byte-identical across runs") {
    const auto a = scratch("det_a"), b = scratch("det_b");
    REQUIRE(cli({"sweep", "--config", bundled("structured.cfg"), "--out", a.string()}).code == 0);
    REQUIRE(cli({"sweep", "--config", bundled("structured.cfg"), "--out", b.string()}).code == 0);
    CHECK(slurp(a / "branches.csv") == slurp(b / "branches.csv"));
    CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
}

TEST_CASE("field and frequency sweeps give identical branch files") {
    const auto dir = scratch("units");
    const double k = cyclotron_frequency(1.0, MaterialParams{});
    const std::string head = "[photons]\nfrequencies_THz = 0.8, 1.6\n[coupling]\nomega_R_11_over_omega1 = 0.37\n"
                             "omega_R_2_tilde_over_omega2 = 0.2124\neta = 0.15\n[sweep]\n";
    char b[256];
    std::snprintf(b, sizeof b, "B_start_T = %.17g\nB_stop_T = %.17g\nB_step_T = %.17g\n", 0.1 / k, 2.0 / k,
                  0.05 / k);
    const auto thz = write(dir / "thz.cfg", head + "nu_c_start_THz = 0.1\nnu_c_stop_THz = 2.0\nnu_c_step_THz = 0.05\n");
    const auto tesla = write(dir / "tesla.cfg", head + b);
    REQUIRE(cli({"sweep", "--config", thz.string(), "--out", (dir / "a").string()}).code == 0);
    REQUIRE(cli({"sweep", "--config", tesla.string(), "--out", (dir / "b").string()}).code == 0);
    CHECK(slurp(dir / "a" / "branches.csv") == slurp(dir / "b" / "branches.csv"));
}

TEST_CASE("fit round trip through the command line") {
    const auto dir = scratch("fit");
    REQUIRE(cli({"sweep", "--config", bundled("unstructured.cfg"), "--out", dir.string()}).code == 0);
    // Sample every 5th ν_c point of the branch file as peaks.
    std::ifstream in(dir / "branches.csv");
    std::string line;
    std::getline(in, line);
    std::map<std::string, std::vector<std::string>> peaks;
    std::vector<std::string> order;
    while (std::getline(in, line)) {
        std::istringstream s(line);
        std::string nu, branch, freq;
        std::getline(s, nu, ',');
        std::getline(s, branch, ',');
        std::getline(s, freq, ',');
        if (!peaks.count(nu))
            order.push_back(nu);
        peaks[nu].push_back(freq);
    }
    std::ostringstream csv;
    csv << "nu_c_THz,peak1_THz,peak2_THz,peak3_THz,peak4_THz\n";
    for (std::size_t i = 0; i < order.size(); i += 5) {
        csv << order[i];
        for (const auto& f : peaks[order[i]])
            csv << ',' << f;
        csv << '\n';
    }
    const auto peaks_file = write(dir / "peaks.csv", csv.str());
    const auto r = cli({"fit", "--config", bundled("unstructured.cfg"), "--peaks", peaks_file.string(), "--out",
                        dir.string(), "--seed", "7"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(slurp(dir / "fit_result.json"));
    CHECK(std::abs(j["omega_R_11_over_omega1"].get<double>() / 0.37 - 1) < 5e-3);
    CHECK(std::abs(j["omega_R_2_tilde_over_omega2"].get<double>() / 0.21240313 - 1) < 5e-3);
    CHECK(std::abs(j["omega_R_11_rad_per_s"].get<double>() / (0.37 * to_angular(0.8)) - 1) < 5e-3);
    CHECK(j["eta"].get<double>() == 0.15);
    CHECK(j["seed"] == 7);
    CHECK(j["converged"] == true);
    const std::string residuals = slurp(dir / "fit_residuals.csv");
    CHECK(residuals.rfind("nu_c_THz,n_peaks,rms_residual_THz\n", 0) == 0);
}

TEST_CASE("missing peaks file exits with code 4 naming the path") {
    const auto dir = scratch("nopeaks");
    const auto missing = (dir / "absent.csv").string();
    const auto r = cli({"fit", "--config", bundled("unstructured.cfg"), "--peaks", missing, "--out", dir.string()});
    CHECK(r.code == 4);
    CHECK(r.err.rfind("ERROR 4: ", 0) == 0);
    CHECK(r.err.find(missing) != std::string::npos);
}

TEST_CASE("insufficient fit coverage exits with code 4") {
    const auto dir = scratch("coverage");
    const auto peaks = write(dir / "p.csv", "nu_c_THz,peak1_THz\n0.1,0.5\n0.2,0.6\n0.3,0.7\n");
    const auto r = cli({"fit", "--config", bundled("unstructured.cfg"), "--peaks", peaks.string(), "--out", dir.string()});
    CHECK(r.code == 4);
}

TEST_CASE("overlap of a profile with itself is one") {
    const auto dir = scratch("overlap_self");
    FixtureGeometry g;
    g.nx = g.ny = 32;
    g.extent_x_um = g.extent_y_um = 128;
    const auto f = synthetic_profile(ProfileKind::dipolar, g);
    write_profile(dir / "f.txt", f);
    const auto r = cli({"overlap", "--profiles", (dir / "f.txt").string(), (dir / "f.txt").string(), "--out",
                        dir.string()});
    REQUIRE(r.code == 0);
    const auto j = json::parse(slurp(dir / "overlap.json"));
    CHECK(j["eta"][0][1].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(j["F_um2"][0][0]["re"].get<double>() > 0.0);
}

TEST_CASE("overlap of the fixture pair on a central mask") {
    const auto dir = scratch("overlap_fixture");
    const auto lc = synthetic_profile(ProfileKind::lc, FixtureGeometry{});
    const auto dp = synthetic_profile(ProfileKind::dipolar, FixtureGeometry{});
    write_profile(dir / "lc.txt", lc);
    write_profile(dir / "dp.txt", dp);
    write_mask(dir / "mask.txt", central_mask(lc, 8.0, 8.0));
    write(dir / "o.cfg", "[photons]\nfrequencies_THz = 0.8, 1.6\n[coupling]\nomega_R_11_over_omega1 = 0.3\n"
                         "omega_R_2_tilde_over_omega2 = 0.1\neta = 0.9\n[overlap]\nphysical_volumes_m3 = 1e-15\n");
    const auto r = cli({"overlap", "--config", (dir / "o.cfg").string(), "--profiles", (dir / "lc.txt").string(),
                        (dir / "dp.txt").string(), "--mask", (dir / "mask.txt").string(), "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = json::parse(slurp(dir / "overlap.json"));
    CHECK(j["eta"][0][1].get<double>() > 0.99);
    CHECK(j["effective_mode_lengths_m"].size() == 2);
    const auto full = cli({"overlap", "--profiles", (dir / "lc.txt").string(), (dir / "dp.txt").string(), "--out",
                           dir.string()});
    REQUIRE(full.code == 0);
    CHECK(json::parse(slurp(dir / "overlap.json"))["eta"][0][1].get<double>() < 0.3);
}

TEST_CASE("overlap input errors exit with code 2") {
    const auto dir = scratch("overlap_bad");
    FixtureGeometry a, b;
    a.nx = a.ny = 16;
    b.nx = b.ny = 20;
    write_profile(dir / "a.txt", synthetic_profile(ProfileKind::lc, a));
    write_profile(dir / "b.txt", synthetic_profile(ProfileKind::lc, b));
    const auto mismatch =
        cli({"overlap", "--profiles", (dir / "a.txt").string(), (dir / "b.txt").string(), "--out", dir.string()});
    CHECK(mismatch.code == 2);
    write(dir / "broken.txt", "2 2 1 1\n1,0 1,0\n1,0 x\n");
    const auto broken = cli({"overlap", "--profiles", (dir / "broken.txt").string(), "--out", dir.string()});
    CHECK(broken.code == 2);
    CHECK(broken.err.find("broken.txt:3") != std::string::npos);
}

TEST_CASE("spectrum map stays in the unit interval and tracks the S-branch") {
    const auto dir = scratch("spectrum");
    REQUIRE(cli({"spectrum", "--config", bundled("structured.cfg"), "--out", dir.string()}).code == 0);
    REQUIRE(cli({"sweep", "--config", bundled("structured.cfg"), "--out", dir.string()}).code == 0);
    const auto rows = read_spectrum(dir / "spectrum.csv");
    CHECK(rows.size() == 216);
    for (const auto& [nu_c, row] : rows)
        for (const auto& [nu, t] : row) {
            CHECK(t >= 0.0);
            CHECK(t <= 1.0);
        }
    // S-branch values from the branch file.
    const auto summary = json::parse(slurp(dir / "summary.json"));
    const int s_col = summary["features"]["s_branch"];
    std::map<double, double> s_branch;
    std::ifstream in(dir / "branches.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        double nu, f;
        int branch;
        char c;
        std::istringstream(line) >> nu >> c >> branch >> c >> f;
        if (branch == s_col)
            s_branch[nu] = f;
    }
    int tracked = 0;
    for (const auto& [nu_c, row] : rows) {
        std::vector<double> t, grid;
        for (const auto& [nu, v] : row) {
            grid.push_back(nu);
            t.push_back(v);
        }
        for (double m : transmission_minima(t, grid, 0.05))
            if (std::abs(m - s_branch.at(nu_c)) < 0.05) {
                ++tracked;
                break;
            }
    }
    CHECK(tracked > 0.9 * rows.size());
}

TEST_CASE("zero coupling spectrum shows vertical lines and the cyclotron diagonal") {
    const auto dir = scratch("spectrum_zero");
    const auto cfg = write(dir / "z.cfg", kZeroCoupling);
    REQUIRE(cli({"spectrum", "--config", cfg.string(), "--out", dir.string()}).code == 0);
    const auto rows = read_spectrum(dir / "spectrum.csv");
    for (const auto& [nu_c, row] : rows) {
        std::vector<double> t, grid;
        for (const auto& [nu, v] : row) {
            grid.push_back(nu);
            t.push_back(v);
        }
        const auto mins = transmission_minima(t, grid, 0.1);
        auto near = [&](double target) {
            for (double m : mins)
                if (std::abs(m - target) <= 0.005)
                    return true;
            return false;
        };
        CHECK(near(0.8));
        CHECK(near(1.6));
        if (std::abs(nu_c - 0.8) > 0.1 && std::abs(nu_c - 1.6) > 0.1)
            CHECK(near(nu_c));
    }
}

TEST_CASE("spectrum without a spectrum section is a config error") {
    const auto dir = scratch("spectrum_missing");
    std::string text = kZeroCoupling.substr(0, kZeroCoupling.find("[spectrum]"));
    const auto cfg = write(dir / "n.cfg", text);
    CHECK(cli({"spectrum", "--config", cfg.string(), "--out", dir.string()}).code == 2);
}
