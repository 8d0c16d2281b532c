#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ybcav/config.hpp"

namespace ybcav {

const std::vector<std::string>& subcommand_names();

struct RunArtifacts {
    std::string csv_path;
    std::string summary_path;
    std::string config_path;
};

/// Runs one subcommand end to end: validates the config, computes, and
/// writes <out>/<name>.csv, <out>/<name>_summary.json and the resolved
/// <out>/<name>_config.json. Throws config_error or numerical_error.
RunArtifacts execute(const std::string& subcommand, const RunConfig& config);

/// execute() wrapped into the exit-code contract: 0 success, 2 config
/// error, 3 numerical failure. Progress and results go to `log`.
int run_cli(const std::string& subcommand, const RunConfig& config,
            std::ostream& log);

} // namespace ybcav
