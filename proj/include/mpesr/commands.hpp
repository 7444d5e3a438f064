#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mpesr/config.hpp"

namespace mpesr {

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 2,
    kExitSolver = 3,
    kExitIo = 4,
    kExitPartial = 5,
};

struct CommandResult {
    int exit_code = kExitOk;
    std::vector<std::filesystem::path> files;  ///< written, relative to out_dir
    std::size_t warnings = 0;
};

/// Seed of the i-th spectrum of a run.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// One CSV per (B1, theta) plus manifest.json.
CommandResult cmd_simulate(const RunConfig& config, std::ostream& log);

/// resonances.csv over orders x theta x B1 plus manifest.json. Failed points
/// leave empty cells and count as warnings.
CommandResult cmd_locate(const RunConfig& config, std::ostream& log);

/// Peak, shift and ratio reports for the spectra named in analyze.inputs.
/// Prints the ratio slopes to out. Unreadable files are reported and
/// skipped; the exit code is then kExitPartial.
CommandResult cmd_analyze(const RunConfig& config, std::ostream& out, std::ostream& log);

/// angular.csv and angular_fit.json; prints the fit to out.
CommandResult cmd_angular(const RunConfig& config, std::ostream& out, std::ostream& log);

}  // namespace mpesr
