#include "polariton/commands.hpp"

#include "polariton/constants.hpp"
#include "polariton/dispersion.hpp"
#include "polariton/errors.hpp"
#include "polariton/fit.hpp"
#include "polariton/overlap.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace polariton {

namespace {

using nlohmann::ordered_json;

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
    return buf;
}

ordered_json optional_json(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json photons_json(const std::vector<PhotonMode>& photons) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : photons)
        arr.push_back({{"index", p.index}, {"label", p.label}, {"frequency_THz", p.frequency}});
    return arr;
}

ordered_json couplings_json(const RunConfig& cfg, const CouplingSet& c) {
    ordered_json rabi = ordered_json::array();
    for (int i = 0; i < c.n_photon(); ++i) {
        ordered_json row = ordered_json::array();
        for (int j = 0; j < c.n_matter(); ++j)
            row.push_back(c.rabi(i, j));
        rabi.push_back(row);
    }
    ordered_json j{{"kind", cfg.coupling.kind == CouplingSpec::Kind::normalized ? "normalized" : "microscopic"},
                   {"rabi_rad_per_s", rabi},
                   {"eta", c.overlap},
                   {"reference_cyclotron_THz", c.reference_cyclotron}};
    return j;
}

ordered_json features_json(const DispersionFeatures& f) {
    auto one_based = [](const std::vector<int>& cols) {
        std::vector<int> out;
        for (int c : cols)
            out.push_back(c + 1);
        return out;
    };
    ordered_json gaps = ordered_json::array();
    for (const auto& g : f.gap_at_resonance)
        gaps.push_back(optional_json(g));
    ordered_json j{{"n_coupled_branches", f.n_coupled_branches},
                   {"n_residual_lines", f.n_residual_lines},
                   {"coupled_branches", one_based(f.coupled_columns)},
                   {"residual_branches", one_based(f.residual_columns)},
                   {"gap_at_resonance_THz", gaps}};
    if (f.s_branch) {
        j["s_branch"] = f.s_branch->column + 1;
        j["inflection_nu_c_THz"] = optional_json(f.s_branch->inflection_nu_c);
        j["asymptote_low_THz"] = f.s_branch->asymptote_low;
        j["asymptote_high_THz"] = f.s_branch->asymptote_high;
    } else {
        j["s_branch"] = nullptr;
        j["inflection_nu_c_THz"] = nullptr;
        j["asymptote_low_THz"] = nullptr;
        j["asymptote_high_THz"] = nullptr;
    }
    return j;
}

void prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw DataError("cannot create output directory " + dir.string());
}

} // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
        dynamic_cast<const StructuralError*>(&e) || dynamic_cast<const DomainError*>(&e))
        return kExitConfig;
    if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const DegenerateProfileError*>(&e) ||
        dynamic_cast<const fs::filesystem_error*>(&e))
        return kExitData;
    return kExitNumerical;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DataError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out)
            throw DataError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

void run_sweep(const RunConfig& cfg, const fs::path& out_dir) {
    const CouplingSet c = cfg.couplings();
    const auto grid = cfg.nu_c_grid();
    const SweepResult s = sweep(cfg.photons, c, grid);

    ordered_json summary{{"config", cfg.source},
                         {"photons", photons_json(cfg.photons)},
                         {"couplings", couplings_json(cfg, c)},
                         {"n_points", s.n_points()},
                         {"nu_c_start_THz", grid.front()},
                         {"nu_c_stop_THz", grid.back()}};
    try {
        summary["features"] = features_json(detect_features(s, cfg.photons));
    } catch (const RangeError& e) {
        summary["features"] = nullptr;
        summary["features_note"] = e.what();
    }

    std::ostringstream csv;
    write_branches_csv(csv, s);
    prepare_dir(out_dir);
    write_file_atomic(out_dir / "branches.csv", csv.str());
    write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");
}

void run_fit(const RunConfig& cfg, const fs::path& peaks_file, const fs::path& out_dir,
             std::optional<std::uint64_t> seed) {
    FitConfig fc = cfg.fit.value_or(FitConfig{});
    if (!cfg.fit)
        fc.eta = cfg.coupling.eta;
    if (seed)
        fc.seed = *seed;
    if (cfg.photons.size() != 2)
        throw ConfigError(cfg.source, "fit needs exactly two photon modes in [photons]");

    const PeakDataset data = read_peaks_csv(peaks_file);
    const FitResult r = fit(data, cfg.photons, fc);

    const double w1 = to_angular(cfg.photons[0].frequency);
    const double w2 = to_angular(cfg.photons[1].frequency);
    const CouplingSet c = fit_couplings(r.params(), cfg.photons);
    ordered_json j{{"source_label", data.source_label},
                   {"n_records", data.records.size()},
                   {"photons", photons_json(cfg.photons)},
                   {"omega_R_11_rad_per_s", r.omega_R_11},
                   {"omega_R_2_tilde_rad_per_s", r.omega_R_2_tilde},
                   {"omega_R_21_rad_per_s", c.rabi(1, 0)},
                   {"omega_R_22_rad_per_s", c.rabi(1, 1)},
                   {"omega_R_11_over_omega1", r.omega_R_11 / w1},
                   {"omega_R_2_tilde_over_omega2", r.omega_R_2_tilde / w2},
                   {"omega_R_21_over_omega1", c.rabi(1, 0) / w1},
                   {"omega_R_22_over_omega2", c.rabi(1, 1) / w2},
                   {"eta", r.eta},
                   {"eta_fitted", fc.fit_eta},
                   {"residual_rms_THz", r.residual_rms},
                   {"n_evaluations", r.n_evaluations},
                   {"converged", r.converged},
                   {"restarts", fc.restarts},
                   {"best_restart", r.best_restart},
                   {"seed", fc.seed}};

    std::ostringstream csv;
    csv << "nu_c_THz,n_peaks,rms_residual_THz\n";
    for (const auto& rr : record_residuals(r.params(), data, cfg.photons))
        csv << fmt9(rr.nu_c) << ',' << rr.n_peaks << ',' << fmt9(rr.rms) << '\n';

    prepare_dir(out_dir);
    write_file_atomic(out_dir / "fit_result.json", j.dump(2) + "\n");
    write_file_atomic(out_dir / "fit_residuals.csv", csv.str());
}

void run_overlap(const RunConfig* cfg, const std::vector<fs::path>& profile_files, const fs::path& mask_file,
                 const fs::path& out_dir) {
    std::vector<fs::path> files = profile_files;
    fs::path mask_path = mask_file;
    if (cfg && cfg->overlap) {
        if (files.empty())
            files = cfg->overlap->profiles;
        if (mask_path.empty() && cfg->overlap->mask)
            mask_path = *cfg->overlap->mask;
    }
    if (files.empty())
        throw ConfigError("", "overlap needs at least one profile (--profiles)");

    std::vector<FieldProfile> profiles;
    for (const auto& f : files)
        profiles.push_back(read_profile(f));
    const DomainMask mask = mask_path.empty() ? full_mask(profiles.front()) : read_mask(mask_path);

    const std::size_t n = profiles.size();
    ordered_json fm = ordered_json::array(), em = ordered_json::array(), phase = ordered_json::array();
    for (std::size_t a = 0; a < n; ++a) {
        ordered_json frow = ordered_json::array(), erow = ordered_json::array(), prow = ordered_json::array();
        for (std::size_t b = 0; b < n; ++b) {
            const auto fab = overlap_integral(profiles[a], profiles[b], mask);
            const auto eta = overlap_parameter_complex(profiles[a], profiles[b], mask);
            frow.push_back({{"re", fab.real()}, {"im", fab.imag()}});
            erow.push_back(std::min(1.0, std::abs(eta)));
            prow.push_back(std::arg(eta));
        }
        fm.push_back(frow);
        em.push_back(erow);
        phase.push_back(prow);
    }

    ordered_json j;
    ordered_json names = ordered_json::array();
    for (const auto& f : files)
        names.push_back(f.string());
    j["profiles"] = names;
    j["mask"] = mask_path.empty() ? ordered_json("full") : ordered_json(mask_path.string());
    j["mask_area_um2"] = mask.area();
    j["F_um2"] = fm;
    j["eta"] = em;
    j["eta_phase_rad"] = phase;
    if (cfg && cfg->overlap && !cfg->overlap->physical_volumes_m3.empty()) {
        const auto& v = cfg->overlap->physical_volumes_m3;
        if (v.size() != 1 && v.size() != n)
            throw ConfigError(cfg->source, "[overlap] physical_volumes_m3 needs one value per profile");
        ordered_json lengths = ordered_json::array();
        for (std::size_t a = 0; a < n; ++a)
            lengths.push_back(effective_mode_volume(profiles[a], mask, v.size() == 1 ? v[0] : v[a]));
        j["effective_mode_lengths_m"] = lengths;
    } else {
        j["effective_mode_lengths_m"] = nullptr;
    }

    prepare_dir(out_dir);
    write_file_atomic(out_dir / "overlap.json", j.dump(2) + "\n");
}

void run_spectrum(const RunConfig& cfg, const fs::path& out_dir) {
    if (!cfg.spectrum)
        throw ConfigError(cfg.source, "missing [spectrum] section");
    const SpectrumConfig sc = cfg.spectrum->config();
    const auto grid = cfg.nu_c_grid();
    const auto rows = spectrum_map(cfg.photons, cfg.couplings(), grid, sc);

    std::string csv = "nu_c,nu,T\n";
    csv.reserve(grid.size() * sc.frequency_grid.size() * 32);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t k = 0; k < sc.frequency_grid.size(); ++k) {
            csv += fmt9(grid[i]);
            csv += ',';
            csv += fmt9(sc.frequency_grid[k]);
            csv += ',';
            csv += fmt9(rows[i][k]);
            csv += '\n';
        }
    prepare_dir(out_dir);
    write_file_atomic(out_dir / "spectrum.csv", csv);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-mode Landau polariton dispersion, fitting and overlap tool", "polariton"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", peaks_path, mask_path;
    std::vector<std::string> profile_paths;
    std::optional<std::uint64_t> seed;

    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep nu_c, write branches.csv and summary.json");
    auto* fit_cmd = app.add_subcommand("fit", "Fit couplings to peak positions");
    auto* overlap_cmd = app.add_subcommand("overlap", "Overlap matrix of field profiles on a mask");
    auto* spectrum_cmd = app.add_subcommand("spectrum", "Transmission proxy map over nu_c and nu");

    for (auto* cmd : {sweep_cmd, fit_cmd, spectrum_cmd})
        cmd->add_option("--config", config_path, "Run configuration")->required();
    overlap_cmd->add_option("--config", config_path, "Run configuration (physical volumes)");
    for (auto* cmd : {sweep_cmd, fit_cmd, overlap_cmd, spectrum_cmd})
        cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    fit_cmd->add_option("--peaks", peaks_path, "Peak dataset CSV")->required();
    fit_cmd->add_option("--seed", seed, "Random seed for restarts");
    overlap_cmd->add_option("--profiles", profile_paths, "Field profile files")->expected(1, -1);
    overlap_cmd->add_option("--mask", mask_path, "Domain mask file (default: full grid)");

    auto fail = [&](int code, const std::string& what) {
        std::string line = what;
        for (char& ch : line)
            if (ch == '\n' || ch == '\r')
                ch = ' ';
        err << "ERROR " << code << ": " << line << std::endl;
        return code;
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return fail(kExitConfig, e.what());
    }

    try {
        std::optional<RunConfig> cfg;
        if (!config_path.empty())
            cfg = load_config(config_path);
        if (*sweep_cmd)
            run_sweep(*cfg, out_dir);
        else if (*fit_cmd)
            run_fit(*cfg, peaks_path, out_dir, seed);
        else if (*overlap_cmd) {
            std::vector<fs::path> files(profile_paths.begin(), profile_paths.end());
            run_overlap(cfg ? &*cfg : nullptr, files, mask_path, out_dir);
        } else if (*spectrum_cmd)
            run_spectrum(*cfg, out_dir);
    } catch (const std::exception& e) {
        return fail(exit_code_for(e), e.what());
    }
    return kExitOk;
}

} // namespace polariton
