// commands.hpp: the sweep / fit / overlap / spectrum commands behind the CLI.
//
// Exit codes: 0 ok, 2 config or format, 3 numerical, 4 data.

#pragma once

#include "polariton/config.hpp"

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace polariton {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitData = 4 };

int exit_code_for(const std::exception& e);

// Writes `content` to a sibling temp file and renames it over `path`.
void write_file_atomic(const fs::path& path, const std::string& content);

// branches.csv, summary.json
void run_sweep(const RunConfig& cfg, const fs::path& out_dir);

// fit_result.json, fit_residuals.csv
void run_fit(const RunConfig& cfg, const fs::path& peaks_file, const fs::path& out_dir,
             std::optional<std::uint64_t> seed = std::nullopt);

// overlap.json. `cfg` may be null; it only supplies physical volumes. An
// empty mask path means the full grid.
void run_overlap(const RunConfig* cfg, const std::vector<fs::path>& profile_files, const fs::path& mask_file,
                 const fs::path& out_dir);

// spectrum.csv with columns nu_c,nu,T
void run_spectrum(const RunConfig& cfg, const fs::path& out_dir);

// Full command line, including the program name in argv[0]. Errors are
// reported on `err` as a single line "ERROR <code>: message".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace polariton
