#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "optexec/config.hpp"

namespace optexec {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitHypothesis = 3,
    kExitNumerical = 4,
};

struct CsvTable {
    std::string name;  // file stem
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct CommandOutput {
    nlohmann::json summary;
    std::vector<CsvTable> tables;
};

const std::vector<std::string>& command_names();

/// Runs a subcommand and returns its results without touching the disk.
CommandOutput execute_command(const std::string& name, const RunConfig& config);

/// Header row plus one line per row, 17 significant digits.
std::string format_csv(const CsvTable& table);

/// Runs a subcommand and writes summary.json, one CSV per table,
/// manifest.ini and manifest.json into the output directory. On failure an
/// error.json report is written when possible. Returns the exit code.
int run_command(const std::string& name, RunConfig config, std::ostream& out, std::ostream& err);

}  // namespace optexec
